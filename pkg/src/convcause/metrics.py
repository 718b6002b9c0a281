"""Weighted precision/recall/F-score over emotion-cause pairs.

Three matching modes:

- pair_only: a prediction scores when (cause, effect, emotion) match a gold
  pair.
- strict: additionally the token span must match exactly.
- proportional: a (cause, effect, emotion) match earns fractional credit,
  |pred span ∩ gold span| / |pred span| toward precision and
  |pred span ∩ gold span| / |gold span| toward recall.

Per-emotion scores are aggregated into a weighted average using gold pair
counts as weights; emotions without gold pairs carry zero weight. Credit
sums are kept as exact rationals until the final division so results do
not depend on accumulation order.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .data import Dataset, EmotionCausePair

__all__ = ["MODES", "EmotionScore", "PRF", "pairs_by_conversation", "evaluate"]

MODES = ("strict", "proportional", "pair_only")


@dataclass
class EmotionScore:
    precision: float
    recall: float
    f1: float
    support: int  # gold pair count
    predicted: int


@dataclass
class PRF:
    mode: str
    per_emotion: dict[str, EmotionScore]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "per_emotion": {
                name: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                    "predicted": s.predicted,
                }
                for name, s in self.per_emotion.items()
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
        }

    def format_table(self) -> str:
        rows = [f"{'emotion':<12} {'P':>8} {'R':>8} {'F1':>8} {'support':>8}"]
        for name in sorted(self.per_emotion):
            s = self.per_emotion[name]
            rows.append(
                f"{name:<12} {s.precision:>8.4f} {s.recall:>8.4f} {s.f1:>8.4f} {s.support:>8d}"
            )
        rows.append(
            f"{'weighted':<12} {self.weighted_precision:>8.4f} {self.weighted_recall:>8.4f} "
            f"{self.weighted_f1:>8.4f} {sum(s.support for s in self.per_emotion.values()):>8d}"
        )
        return "\n".join(rows)


@dataclass
class _Counter:
    gold: dict[str, int] = field(default_factory=dict)
    pred: dict[str, int] = field(default_factory=dict)
    prec_credit: dict[str, Fraction] = field(default_factory=dict)
    rec_credit: dict[str, Fraction] = field(default_factory=dict)

    def merge(self, other: "_Counter") -> None:
        for src, dst in (
            (other.gold, self.gold),
            (other.pred, self.pred),
            (other.prec_credit, self.prec_credit),
            (other.rec_credit, self.rec_credit),
        ):
            for k, v in src.items():
                dst[k] = dst.get(k, 0) + v


def pairs_by_conversation(dataset: Dataset) -> dict[str, list[EmotionCausePair]]:
    return {conv.id: list(conv.gold_pairs) for conv in dataset.conversations}


def _dedupe(pairs: Iterable[EmotionCausePair], conv_id: str) -> list[EmotionCausePair]:
    by_key: dict[tuple[int, int], EmotionCausePair] = {}
    for p in pairs:
        key = (p.cause_index, p.effect_index)
        if key in by_key:
            if by_key[key] != p:
                raise ValueError(
                    f"conversation {conv_id}: conflicting duplicate predictions for pair {key}"
                )
            continue  # exact duplicate, collapse
        by_key[key] = p
    return list(by_key.values())


def _span_overlap(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(0, min(a[1], b[1]) - max(a[0], b[0]))


def _score_conversation(
    conv_id: str,
    preds: Sequence[EmotionCausePair],
    golds: Sequence[EmotionCausePair],
    mode: str,
) -> _Counter:
    c = _Counter()
    for g in golds:
        c.gold[g.emotion] = c.gold.get(g.emotion, 0) + 1
    gold_map = {(g.cause_index, g.effect_index): g for g in golds}
    for p in _dedupe(preds, conv_id):
        c.pred[p.emotion] = c.pred.get(p.emotion, 0) + 1
        g = gold_map.get((p.cause_index, p.effect_index))
        if g is None or g.emotion != p.emotion:
            continue
        if mode == "pair_only":
            pc = rc = Fraction(1)
        elif mode == "strict":
            if p.span is None or g.span is None or p.span != g.span:
                continue
            pc = rc = Fraction(1)
        else:  # proportional
            if p.span is None or g.span is None:
                continue
            ov = _span_overlap(p.span, g.span)
            pc = Fraction(ov, p.span[1] - p.span[0])
            rc = Fraction(ov, g.span[1] - g.span[0])
        c.prec_credit[p.emotion] = c.prec_credit.get(p.emotion, Fraction(0)) + pc
        c.rec_credit[p.emotion] = c.rec_credit.get(p.emotion, Fraction(0)) + rc
    return c


def evaluate(
    predictions: Mapping[str, Sequence[EmotionCausePair]],
    golds: Mapping[str, Sequence[EmotionCausePair]],
    mode: str = "strict",
    threads: int = 1,
) -> PRF:
    """Score predictions against golds; both map conversation id to pairs.

    A prediction for an unknown conversation is an error; a gold
    conversation without predictions counts as all-missed.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    unknown = sorted(set(predictions) - set(golds))
    if unknown:
        raise ValueError(f"predictions reference unknown conversations: {unknown}")

    conv_ids = sorted(golds)
    jobs = [(cid, predictions.get(cid, ()), golds[cid]) for cid in conv_ids]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counters = list(pool.map(lambda j: _score_conversation(j[0], j[1], j[2], mode), jobs))
    else:
        counters = [_score_conversation(cid, p, g, mode) for cid, p, g in jobs]
    total = _Counter()
    for c in counters:  # deterministic reduce in sorted-conversation order
        total.merge(c)

    names = sorted(set(total.gold) | set(total.pred))
    per_emotion: dict[str, EmotionScore] = {}
    for name in names:
        n_pred = total.pred.get(name, 0)
        n_gold = total.gold.get(name, 0)
        pc = total.prec_credit.get(name, Fraction(0))
        rc = total.rec_credit.get(name, Fraction(0))
        p = float(pc / n_pred) if n_pred else 0.0
        r = float(rc / n_gold) if n_gold else 0.0
        f = 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)
        per_emotion[name] = EmotionScore(precision=p, recall=r, f1=f, support=n_gold, predicted=n_pred)

    wsum = sum(s.support for s in per_emotion.values())
    if wsum == 0:
        wp = wr = wf = 0.0
    else:
        wp = sum(s.support * s.precision for _, s in sorted(per_emotion.items())) / wsum
        wr = sum(s.support * s.recall for _, s in sorted(per_emotion.items())) / wsum
        wf = sum(s.support * s.f1 for _, s in sorted(per_emotion.items())) / wsum
    return PRF(
        mode=mode,
        per_emotion=per_emotion,
        weighted_precision=wp,
        weighted_recall=wr,
        weighted_f1=wf,
    )

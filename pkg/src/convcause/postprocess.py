"""Turn decoder score tensors into discrete emotion-cause pair predictions.

All decisions are local: arcs by thresholding the arc matrix, the emotion
per effect utterance by summing label scores over its predicted causes,
and spans by the leftmost/rightmost tokens above a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Conversation, EmotionCausePair
from .decoder import CauseGraphScores

__all__ = [
    "DecodeConfig",
    "decode_arcs",
    "decode_emotions",
    "decode_span",
    "assemble_predictions",
    "decode_conversation",
    "logits_from_targets",
]


@dataclass
class DecodeConfig:
    arc_threshold: float = 0.0  # logit scale; 0.0 is probability 0.5
    span_threshold: float = 0.0
    fallback_emotion: str | None = None  # None: "neutral" if present, else best aggregate

    def __post_init__(self):
        if not (np.isfinite(self.arc_threshold) and np.isfinite(self.span_threshold)):
            raise ValueError("thresholds must be finite")


def decode_arcs(arc: np.ndarray, cfg: DecodeConfig) -> list[tuple[int, int]]:
    """1-based (cause, effect) pairs whose logit clears the threshold.
    Self-arcs are allowed."""
    if not np.all(np.isfinite(arc)):
        raise ValueError("arc matrix contains non-finite scores")
    cause_idx, effect_idx = np.nonzero(arc > cfg.arc_threshold)
    return [(int(i) + 1, int(j) + 1) for i, j in zip(cause_idx, effect_idx)]


def decode_emotions(
    label: np.ndarray,
    arcs: list[tuple[int, int]],
    emotions: tuple[str, ...],
    cfg: DecodeConfig,
) -> tuple[list[str], dict[tuple[int, int], str]]:
    """Per-utterance emotions plus the emotion carried by each arc.

    For an effect with predicted causes, scores are summed over those
    causes and the argmax taken (ties resolve to the lowest emotion id).
    Effects with no incoming arc get the fallback emotion.
    """
    m = label.shape[0]
    fallback = cfg.fallback_emotion
    if fallback is not None and fallback not in emotions:
        raise ValueError(f"fallback emotion {fallback!r} is not in the inventory")
    causes_of: dict[int, list[int]] = {}
    for i, j in arcs:
        causes_of.setdefault(j, []).append(i)
    per_utterance: list[str] = []
    for j in range(1, m + 1):
        causes = causes_of.get(j)
        if causes:
            totals = label[[i - 1 for i in causes], j - 1, :].sum(axis=0)
            per_utterance.append(emotions[int(np.argmax(totals))])
        elif fallback is not None:
            per_utterance.append(fallback)
        elif "neutral" in emotions:
            per_utterance.append("neutral")
        else:
            totals = label[:, j - 1, :].sum(axis=0)
            per_utterance.append(emotions[int(np.argmax(totals))])
    arc_emotions = {(i, j): per_utterance[j - 1] for i, j in arcs}
    return per_utterance, arc_emotions


def decode_span(scores: np.ndarray, cfg: DecodeConfig) -> tuple[int, int] | None:
    """Token interval from the leftmost to the rightmost score above the
    threshold; interior dips are included. None when nothing clears it."""
    above = np.nonzero(np.asarray(scores) > cfg.span_threshold)[0]
    if above.size == 0:
        return None
    return int(above[0]), int(above[-1]) + 1


def assemble_predictions(
    conv: Conversation,
    arcs: list[tuple[int, int]],
    arc_emotions: dict[tuple[int, int], str],
    spans: dict[tuple[int, int], tuple[int, int] | None],
    span_mode: bool = True,
) -> list[EmotionCausePair]:
    """Pair records sorted by (effect, cause); span_mode attaches spans,
    falling back to the whole cause utterance when none was decoded."""
    out = []
    for i, j in sorted(arcs, key=lambda ij: (ij[1], ij[0])):
        span = None
        if span_mode:
            span = spans.get((i, j))
            if span is None:
                span = (0, len(conv.utterances[i - 1].tokens))
        out.append(
            EmotionCausePair(cause_index=i, effect_index=j, emotion=arc_emotions[(i, j)], span=span)
        )
    return out


def decode_conversation(
    conv: Conversation,
    scores: CauseGraphScores,
    emotions: tuple[str, ...],
    cfg: DecodeConfig | None = None,
    span_mode: bool = True,
) -> tuple[list[EmotionCausePair], list[str]]:
    """Full post-processing for one conversation; returns the predicted
    pairs and the per-utterance emotions."""
    cfg = cfg or DecodeConfig()
    arc = scores.arc.data
    label = scores.label.data
    span = scores.span.data
    arcs = decode_arcs(arc, cfg)
    per_utterance, arc_emotions = decode_emotions(label, arcs, emotions, cfg)
    spans: dict[tuple[int, int], tuple[int, int] | None] = {}
    for i, j in arcs:
        real_len = min(scores.lengths[i - 1], span.shape[2])
        spans[(i, j)] = decode_span(span[i - 1, j - 1, :real_len], cfg)
    pairs = assemble_predictions(conv, arcs, arc_emotions, spans, span_mode=span_mode)
    return pairs, per_utterance


def logits_from_targets(
    a: np.ndarray,
    lab: np.ndarray,
    s: np.ndarray,
    n_emotions: int | None = None,
    hi: float = 10.0,
    lo: float = -10.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map {0,1} gold targets onto saturated logits, the exact inverse
    setting for the decode round-trip: gold structure in, gold pairs out."""
    if n_emotions is None:
        n_emotions = int(lab.max()) + 1 if lab.size and lab.max() >= 0 else 1
    arc = np.where(a > 0, hi, lo)
    label = np.full(a.shape + (n_emotions,), lo)
    for i, j in zip(*np.nonzero(a)):
        label[i, j, lab[i, j]] = hi
    span = np.where(s > 0, hi, lo)
    return arc, label, span

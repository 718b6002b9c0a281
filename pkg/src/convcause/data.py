"""Conversations, gold annotations, and ingestion from the task JSON format.

Canonical schema (one JSON array of conversations):

    [{"conversation_ID": str,
      "conversation": [{"utterance_ID": int, "text": str,
                        "speaker": str, "emotion": str}],
      "emotion-cause_pairs": [["<effect>_<emotion>", "<cause>_<span>"]]}]

The second pair element encodes the cause utterance index plus an optional
span: `"4"` (no span), `"4_2_9"` (token span [2, 9)), or `"4_some words"`
(annotated text located inside the cause utterance). Character-offset spans
from older releases are accepted via ``span_encoding="chars"``.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DatasetParseError",
    "DatasetValidationError",
    "Utterance",
    "EmotionCausePair",
    "Conversation",
    "Dataset",
    "PAD_ID",
    "UNK_ID",
    "CLS_ID",
    "tokenize",
    "char_span_to_token_span",
    "parse_dataset",
    "to_canonical_json",
    "split_dataset",
    "gold_targets",
    "build_vocabulary",
]

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


class DatasetParseError(ValueError):
    """The document is not structurally valid JSON for this schema."""


class DatasetValidationError(ValueError):
    """The document parsed, but violates a dataset invariant."""


@dataclass(frozen=True)
class Utterance:
    index: int  # 1-based position within the conversation
    text: str
    tokens: tuple[str, ...]
    speaker: str
    gold_emotion: str | None = None


@dataclass(frozen=True)
class EmotionCausePair:
    cause_index: int
    effect_index: int
    emotion: str
    span: tuple[int, int] | None = None  # half-open token interval over the cause


@dataclass(frozen=True)
class Conversation:
    id: str
    utterances: tuple[Utterance, ...]
    gold_pairs: tuple[EmotionCausePair, ...] = ()

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def speakers(self) -> list[str]:
        return [u.speaker for u in self.utterances]

    @property
    def max_tokens(self) -> int:
        return max(len(u.tokens) for u in self.utterances)


@dataclass(frozen=True)
class Dataset:
    conversations: tuple[Conversation, ...]
    emotions: tuple[str, ...]
    vocabulary: dict[str, int] | None = None

    def __len__(self) -> int:
        return len(self.conversations)

    def emotion_id(self, name: str) -> int:
        return self.emotions.index(name)

    def with_vocabulary(self, vocabulary: dict[str, int]) -> "Dataset":
        return dataclasses.replace(self, vocabulary=vocabulary)


def tokenize(text: str) -> tuple[tuple[str, ...], tuple[tuple[int, int], ...]]:
    """Lowercase word/punctuation tokens plus their character offsets."""
    tokens, offsets = [], []
    for m in _TOKEN_RE.finditer(text.lower()):
        tokens.append(m.group())
        offsets.append((m.start(), m.end()))
    return tuple(tokens), tuple(offsets)


def char_span_to_token_span(
    offsets: tuple[tuple[int, int], ...], start: int, end: int
) -> tuple[int, int]:
    """Smallest token interval covering every token that intersects
    characters [start, end); never truncates annotated words."""
    hit = [k for k, (s, e) in enumerate(offsets) if s < end and e > start]
    if not hit:
        raise DatasetValidationError(f"character span [{start}, {end}) covers no tokens")
    return hit[0], hit[-1] + 1


def _field(obj: dict, *names: str):
    for n in names:
        if n in obj:
            return obj[n]
    return None


def _parse_pair_strings(
    pair: list, conv_id: str, utterances: tuple[Utterance, ...], span_encoding: str
) -> EmotionCausePair:
    if not (isinstance(pair, list) and len(pair) == 2):
        raise DatasetValidationError(f"conversation {conv_id}: malformed pair entry {pair!r}")
    effect_part, cause_part = str(pair[0]), str(pair[1])
    try:
        effect_str, emotion = effect_part.split("_", 1)
        effect = int(effect_str)
    except ValueError:
        raise DatasetValidationError(
            f"conversation {conv_id}: malformed effect element {effect_part!r}"
        ) from None
    emotion = emotion.strip().lower()

    cause_bits = cause_part.split("_")
    try:
        cause = int(cause_bits[0])
    except ValueError:
        raise DatasetValidationError(
            f"conversation {conv_id}: malformed cause element {cause_part!r}"
        ) from None

    m = len(utterances)
    if not (1 <= cause <= m and 1 <= effect <= m):
        raise DatasetValidationError(
            f"conversation {conv_id}: pair ({cause} -> {effect}) references an utterance outside [1, {m}]"
        )
    cause_utt = utterances[cause - 1]

    tail = cause_bits[1:]
    span: tuple[int, int] | None
    if not tail:
        span = None
    elif len(tail) == 2 and tail[0].lstrip("-").isdigit() and tail[1].lstrip("-").isdigit():
        lo, hi = int(tail[0]), int(tail[1])
        if span_encoding == "chars":
            _, offsets = tokenize(cause_utt.text)
            span = char_span_to_token_span(offsets, lo, hi)
        else:
            span = (lo, hi)
    else:
        span_text = "_".join(tail)
        pos = cause_utt.text.lower().find(span_text.lower())
        if pos < 0:
            raise DatasetValidationError(
                f"conversation {conv_id}: span text {span_text!r} not found in utterance {cause}"
            )
        _, offsets = tokenize(cause_utt.text)
        span = char_span_to_token_span(offsets, pos, pos + len(span_text))

    if span is not None:
        lo, hi = span
        if not (0 <= lo < hi <= len(cause_utt.tokens)):
            raise DatasetValidationError(
                f"conversation {conv_id}: span [{lo}, {hi}) out of range for utterance {cause} "
                f"with {len(cause_utt.tokens)} tokens"
            )
    return EmotionCausePair(cause_index=cause, effect_index=effect, emotion=emotion, span=span)


def parse_dataset(document: bytes | str, mode: str = "train", span_encoding: str = "auto") -> Dataset:
    """Load a JSON conversation corpus into the in-memory model.

    In train mode every utterance must carry an emotion and all pairs are
    validated; in predict mode gold emotions and pairs are dropped.
    """
    if mode not in ("train", "predict"):
        raise ValueError(f"mode must be 'train' or 'predict', got {mode!r}")
    if span_encoding not in ("auto", "chars"):
        raise ValueError(f"span_encoding must be 'auto' or 'chars', got {span_encoding!r}")
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise DatasetParseError("document must be a JSON array of conversations")

    conversations: list[Conversation] = []
    inventory: set[str] = set()
    for conv_obj in raw:
        if not isinstance(conv_obj, dict):
            raise DatasetParseError("conversation entries must be JSON objects")
        conv_id = _field(conv_obj, "conversation_ID", "conversation_id", "id")
        if conv_id is None:
            raise DatasetParseError("conversation without a conversation_ID")
        conv_id = str(conv_id)
        utt_objs = _field(conv_obj, "conversation", "utterances")
        if not isinstance(utt_objs, list) or not utt_objs:
            raise DatasetValidationError(f"conversation {conv_id}: needs a non-empty utterance list")

        utterances: list[Utterance] = []
        for pos, u in enumerate(utt_objs, start=1):
            idx = _field(u, "utterance_ID", "utterance_id", "index")
            if idx is None:
                idx = pos
            if int(idx) != pos:
                raise DatasetValidationError(
                    f"conversation {conv_id}: utterance_ID {idx} out of order (expected {pos})"
                )
            text = str(_field(u, "text") or "")
            tokens, _ = tokenize(text)
            if not tokens:
                raise DatasetValidationError(
                    f"conversation {conv_id}: utterance {pos} has no tokens"
                )
            emotion = _field(u, "emotion")
            if mode == "train":
                if emotion is None:
                    raise DatasetValidationError(
                        f"conversation {conv_id}: utterance {pos} is missing its emotion"
                    )
                emotion = str(emotion).strip().lower()
                inventory.add(emotion)
            else:
                emotion = None
            utterances.append(
                Utterance(
                    index=pos,
                    text=text,
                    tokens=tokens,
                    speaker=str(_field(u, "speaker") or ""),
                    gold_emotion=emotion,
                )
            )
        utterances = tuple(utterances)

        pairs: list[EmotionCausePair] = []
        if mode == "train":
            seen: set[tuple[int, int]] = set()
            for pair_obj in _field(conv_obj, "emotion-cause_pairs", "emotion_cause_pairs") or []:
                pair = _parse_pair_strings(pair_obj, conv_id, utterances, span_encoding)
                key = (pair.cause_index, pair.effect_index)
                if key in seen:
                    raise DatasetValidationError(
                        f"conversation {conv_id}: duplicate pair ({pair.cause_index} -> {pair.effect_index})"
                    )
                seen.add(key)
                effect_emotion = utterances[pair.effect_index - 1].gold_emotion
                if pair.emotion != effect_emotion:
                    raise DatasetValidationError(
                        f"conversation {conv_id}: pair emotion {pair.emotion!r} does not match "
                        f"effect utterance {pair.effect_index}'s emotion {effect_emotion!r}"
                    )
                if pair.emotion not in inventory:
                    raise DatasetValidationError(
                        f"conversation {conv_id}: pair emotion {pair.emotion!r} is not in the inventory"
                    )
                pairs.append(pair)
        conversations.append(Conversation(id=conv_id, utterances=utterances, gold_pairs=tuple(pairs)))

    if mode == "train" and not inventory:
        raise DatasetValidationError("train mode requires a non-empty emotion inventory")
    return Dataset(conversations=tuple(conversations), emotions=tuple(sorted(inventory)))


def to_canonical_json(dataset: Dataset) -> str:
    """Serialize with token-span pair encoding; parse_dataset round-trips it."""
    out = []
    for conv in dataset.conversations:
        utts = []
        for u in conv.utterances:
            obj = {"utterance_ID": u.index, "text": u.text, "speaker": u.speaker}
            if u.gold_emotion is not None:
                obj["emotion"] = u.gold_emotion
            utts.append(obj)
        pairs = []
        for p in sorted(conv.gold_pairs, key=lambda p: (p.effect_index, p.cause_index)):
            cause = str(p.cause_index) if p.span is None else f"{p.cause_index}_{p.span[0]}_{p.span[1]}"
            pairs.append([f"{p.effect_index}_{p.emotion}", cause])
        out.append(
            {"conversation_ID": conv.id, "conversation": utts, "emotion-cause_pairs": pairs}
        )
    return json.dumps(out, indent=1)


def split_dataset(dataset: Dataset, dev_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic whole-conversation split; dev gets round(fraction * n)."""
    if not 0.0 < dev_fraction < 1.0:
        raise ValueError(f"dev_fraction must lie in (0, 1), got {dev_fraction}")
    n = len(dataset.conversations)
    k = round(dev_fraction * n)
    if k == 0 or k == n:
        raise ValueError(
            f"dev_fraction {dev_fraction} yields an empty split for {n} conversations"
        )
    perm = np.random.default_rng(seed).permutation(n)
    dev_idx = set(int(i) for i in perm[:k])
    train = tuple(c for i, c in enumerate(dataset.conversations) if i not in dev_idx)
    dev = tuple(c for i, c in enumerate(dataset.conversations) if i in dev_idx)
    return (
        dataclasses.replace(dataset, conversations=train),
        dataclasses.replace(dataset, conversations=dev),
    )


def gold_targets(
    conv: Conversation, emotions: tuple[str, ...]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense training targets for one conversation.

    Returns (A, L, S): arc indicator (m, m), emotion ids (m, m) with -1
    where no arc, and span indicators (m, m, max_len) where axis 0 is the
    cause utterance. Pairs without a span leave their S row all zero.
    """
    m = len(conv.utterances)
    lmax = conv.max_tokens
    a = np.zeros((m, m), dtype=np.int8)
    lab = np.full((m, m), -1, dtype=np.int64)
    s = np.zeros((m, m, lmax), dtype=np.int8)
    for p in conv.gold_pairs:
        i, j = p.cause_index - 1, p.effect_index - 1
        a[i, j] = 1
        lab[i, j] = emotions.index(p.emotion)
        if p.span is not None:
            s[i, j, p.span[0] : p.span[1]] = 1
    return a, lab, s


def build_vocabulary(dataset: Dataset) -> dict[str, int]:
    """Token -> id map from a training split; ids 0/1/2 are reserved for
    padding, unknown and the CLS-analog."""
    counts: dict[str, int] = {}
    for conv in dataset.conversations:
        for u in conv.utterances:
            for tok in u.tokens:
                counts[tok] = counts.get(tok, 0) + 1
    vocab = {"<pad>": PAD_ID, "<unk>": UNK_ID, "<cls>": CLS_ID}
    for tok in sorted(counts, key=lambda t: (-counts[t], t)):
        vocab[tok] = len(vocab)
    return vocab

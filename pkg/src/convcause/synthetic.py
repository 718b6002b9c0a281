"""Deterministic synthetic conversation corpora for experiments and tests.

The generated corpus is separable by construction: every emotion has cue
words that appear in the effect utterance and trigger words that appear,
contiguously, in the cause utterance; the trigger run is the gold span.
Each emotion is used at most once per conversation so arcs are uniquely
attributable from lexical evidence alone.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .data import Conversation, Dataset, EmotionCausePair, Utterance, build_vocabulary
from .encoder import feature_id

__all__ = [
    "CUE_WORDS",
    "TRIGGER_WORDS",
    "make_synthetic_dataset",
    "make_stub_text_features",
    "make_stub_sequence_features",
]

CUE_WORDS = {
    "anger": ("furious", "mad"),
    "joy": ("wonderful", "delighted"),
    "sadness": ("terrible", "awful"),
}
TRIGGER_WORDS = {
    "anger": ("insult", "shouting"),
    "joy": ("gift", "praise"),
    "sadness": ("loss", "grief"),
}

_FILLERS = (
    "the a and so well you know i we see right hmm oh now then it that was is just "
    "said come here look very too about really think going good still again never"
).split()

_SPEAKERS = ("ana", "ben", "carla", "dan")


def make_synthetic_dataset(
    n_conversations: int = 8,
    seed: int = 0,
    min_utterances: int = 3,
    max_utterances: int = 6,
    max_pairs: int = 3,
) -> Dataset:
    """Corpus with deterministic token -> emotion/span patterns; emotions
    are the three cue emotions plus neutral."""
    rng = np.random.default_rng(seed)
    emotions = tuple(sorted(set(CUE_WORDS) | {"neutral"}))
    conversations = []
    for c in range(n_conversations):
        m = int(rng.integers(min_utterances, max_utterances + 1))
        utt_emotions = ["neutral"] * m
        n_pairs = int(rng.integers(1, min(max_pairs, m) + 1))
        used_emotions = [str(e) for e in rng.permutation(sorted(CUE_WORDS))[:n_pairs]]
        effects = sorted(int(j) for j in rng.choice(m, size=n_pairs, replace=False))
        abstract = []
        for emotion, j in zip(used_emotions, effects):
            i = int(rng.integers(0, j + 1))  # cause at or before the effect
            run = [str(rng.choice(TRIGGER_WORDS[emotion])) for _ in range(int(rng.integers(1, 4)))]
            abstract.append((i, j, emotion, run))
            utt_emotions[j] = emotion

        # lay each utterance out from atomic segments so trigger runs stay
        # contiguous even when one utterance hosts several insertions
        segments: list[list] = [
            [[str(rng.choice(_FILLERS))] for _ in range(int(rng.integers(4, 10)))] for _ in range(m)
        ]
        for pid, (i, j, emotion, run) in enumerate(abstract):
            segments[i].insert(int(rng.integers(0, len(segments[i]) + 1)), ("run", pid, run))
            segments[j].insert(
                int(rng.integers(0, len(segments[j]) + 1)), [str(rng.choice(CUE_WORDS[emotion]))]
            )

        token_lists: list[list[str]] = [[] for _ in range(m)]
        span_of: dict[int, tuple[int, int]] = {}
        for k in range(m):
            for seg in segments[k]:
                if isinstance(seg, tuple):
                    _, pid, run = seg
                    span_of[pid] = (len(token_lists[k]), len(token_lists[k]) + len(run))
                    token_lists[k].extend(run)
                else:
                    token_lists[k].extend(seg)

        pairs = tuple(
            EmotionCausePair(
                cause_index=i + 1, effect_index=j + 1, emotion=emotion, span=span_of[pid]
            )
            for pid, (i, j, emotion, _run) in enumerate(abstract)
        )
        utterances = tuple(
            Utterance(
                index=k + 1,
                text=" ".join(token_lists[k]),
                tokens=tuple(token_lists[k]),
                speaker=_SPEAKERS[k % len(_SPEAKERS)],
                gold_emotion=utt_emotions[k],
            )
            for k in range(m)
        )
        conversations.append(
            Conversation(id=f"syn{c + 1}", utterances=utterances, gold_pairs=pairs)
        )
    dataset = Dataset(conversations=tuple(conversations), emotions=emotions)
    return dataset.with_vocabulary(build_vocabulary(dataset))


def _token_rng(key: str, seed: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def make_stub_text_features(dataset: Dataset, dim: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Word-level records with one deterministic vector per token type and
    a CLS row equal to the mean of the word rows (a bag-of-words summary)."""
    records: dict[str, np.ndarray] = {}
    cache: dict[str, np.ndarray] = {}
    for conv in dataset.conversations:
        for u in conv.utterances:
            rows = []
            for tok in u.tokens:
                if tok not in cache:
                    cache[tok] = _token_rng(f"tok:{tok}", seed).standard_normal(dim)
                rows.append(cache[tok])
            words = np.stack(rows)
            rec = np.vstack([words.mean(axis=0, keepdims=True), words])
            records[feature_id(conv.id, u.index)] = rec.astype(np.float32)
    return records


def make_stub_sequence_features(
    dataset: Dataset, dim: int, rows: int, kind: str, seed: int = 0
) -> dict[str, np.ndarray]:
    """Fixed-row records (e.g. per-frame or per-window vectors) drawn
    deterministically per utterance."""
    records: dict[str, np.ndarray] = {}
    for conv in dataset.conversations:
        for u in conv.utterances:
            rid = feature_id(conv.id, u.index)
            rng = _token_rng(f"{kind}:{rid}", seed)
            records[rid] = rng.standard_normal((rows, dim)).astype(np.float32)
    return records

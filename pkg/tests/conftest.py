"""Shared test fixtures: small hand-built conversations and random gold
graphs obeying the dataset invariants."""

from __future__ import annotations

import numpy as np
import pytest

from convcause.data import Conversation, Dataset, EmotionCausePair, Utterance, build_vocabulary

WORDS = (
    "oh well the a you it that see right now then was is just fine look go stop "
    "really sure good bad old new here there"
).split()


def random_gold_conversation(
    rng: np.random.Generator,
    emotions: tuple[str, ...],
    conv_id: str = "c1",
    max_m: int = 6,
    max_span: int = 5,
    with_spans: bool = True,
) -> Conversation:
    """Random conversation with a valid gold pair set: unique (cause,
    effect) keys, one emotion per effect utterance, spans inside the cause."""
    m = int(rng.integers(1, max_m + 1))
    token_lists = [
        [str(rng.choice(WORDS)) for _ in range(int(rng.integers(max_span, max_span + 4)))]
        for _ in range(m)
    ]
    non_neutral = [e for e in emotions if e != "neutral"] or list(emotions)
    effect_emotion = {j: str(rng.choice(non_neutral)) for j in range(1, m + 1)}
    pairs = []
    seen = set()
    for _ in range(int(rng.integers(0, m + 1))):
        i = int(rng.integers(1, m + 1))
        j = int(rng.integers(1, m + 1))
        if (i, j) in seen:
            continue
        seen.add((i, j))
        span = None
        if with_spans:
            li = len(token_lists[i - 1])
            width = int(rng.integers(1, min(max_span, li) + 1))
            lo = int(rng.integers(0, li - width + 1))
            span = (lo, lo + width)
        pairs.append(
            EmotionCausePair(
                cause_index=i, effect_index=j, emotion=effect_emotion[j], span=span
            )
        )
    utterances = tuple(
        Utterance(
            index=k + 1,
            text=" ".join(token_lists[k]),
            tokens=tuple(token_lists[k]),
            speaker=str(rng.choice(("ana", "ben", "carla"))),
            gold_emotion=effect_emotion[k + 1]
            if any(p.effect_index == k + 1 for p in pairs)
            else "neutral",
        )
        for k in range(m)
    )
    return Conversation(id=conv_id, utterances=utterances, gold_pairs=tuple(pairs))


@pytest.fixture
def tiny_dataset() -> Dataset:
    """Three hand-written conversations with known counts."""
    from convcause.data import parse_dataset

    doc = """
    [
      {"conversation_ID": "tv_1",
       "conversation": [
         {"utterance_ID": 1, "text": "You told it wrong !", "speaker": "Ana", "emotion": "anger"},
         {"utterance_ID": 2, "text": "I am so happy", "speaker": "Ben", "emotion": "joy"}
       ],
       "emotion-cause_pairs": [["1_anger", "1_0_3"], ["2_joy", "1_you told it wrong"]]},
      {"conversation_ID": "tv_2",
       "conversation": [
         {"utterance_ID": 1, "text": "what a gift", "speaker": "Carla", "emotion": "joy"}
       ],
       "emotion-cause_pairs": [["1_joy", "1_2_3"]]},
      {"conversation_ID": "tv_3",
       "conversation": [
         {"utterance_ID": 1, "text": "it rained all day", "speaker": "Ana", "emotion": "neutral"},
         {"utterance_ID": 2, "text": "my dog ran away", "speaker": "Ben", "emotion": "sadness"},
         {"utterance_ID": 3, "text": "oh no", "speaker": "Ana", "emotion": "sadness"}
       ],
       "emotion-cause_pairs": [["2_sadness", "2_0_4"], ["3_sadness", "2_0_4"]]}
    ]
    """
    return parse_dataset(doc)


@pytest.fixture
def tiny_vocab(tiny_dataset) -> dict[str, int]:
    return build_vocabulary(tiny_dataset)

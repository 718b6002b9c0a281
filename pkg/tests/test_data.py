"""Dataset ingestion, splitting and gold-target construction."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convcause.data import (
    DatasetParseError,
    DatasetValidationError,
    build_vocabulary,
    char_span_to_token_span,
    gold_targets,
    parse_dataset,
    split_dataset,
    to_canonical_json,
    tokenize,
)
from convcause.synthetic import make_synthetic_dataset


class TestTokenize:
    def test_whitespace_and_case(self):
        tokens, offsets = tokenize("I am so happy")
        assert tokens == ("i", "am", "so", "happy")
        assert offsets == ((0, 1), (2, 4), (5, 7), (8, 13))

    def test_punctuation_split(self):
        tokens, _ = tokenize("You told it wrong!  Don't.")
        assert tokens == ("you", "told", "it", "wrong", "!", "don", "'", "t", ".")

    def test_char_span_covers_intersecting_tokens(self):
        _, offsets = tokenize("I am so happy")
        assert char_span_to_token_span(offsets, 5, 13) == (2, 4)
        # partial overlap on both ends still covers the words
        assert char_span_to_token_span(offsets, 6, 9) == (2, 4)

    def test_char_span_no_tokens(self):
        _, offsets = tokenize("a b")
        with pytest.raises(DatasetValidationError):
            char_span_to_token_span(offsets, 1, 2)  # whitespace only

    @given(st.integers(0, 12), st.integers(1, 6))
    def test_char_span_always_covers_annotation(self, start, width):
        text = "one two three four"
        tokens, offsets = tokenize(text)
        end = min(start + width, len(text))
        if start >= end:
            return
        try:
            lo, hi = char_span_to_token_span(offsets, start, end)
        except DatasetValidationError:
            return  # annotated only whitespace
        # every character of the annotation inside some token is covered
        assert offsets[lo][0] <= start + (0 if text[start] != " " else 1)
        assert offsets[hi - 1][1] >= end - (0 if text[end - 1] != " " else 1)


class TestParseDataset:
    def test_text_span_to_token_span(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "hello there", "speaker": "a", "emotion": "neutral"},
                        {"utterance_ID": 2, "text": "I am so happy", "speaker": "b", "emotion": "joy"},
                    ],
                    "emotion-cause_pairs": [["2_joy", "2_so happy"]],
                }
            ]
        )
        ds = parse_dataset(doc)
        assert ds.conversations[0].gold_pairs[0].span == (2, 4)

    def test_char_offset_span(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "I am so happy", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [["1_joy", "1_5_13"]],
                }
            ]
        )
        ds = parse_dataset(doc, span_encoding="chars")
        assert ds.conversations[0].gold_pairs[0].span == (2, 4)

    def test_empty_document(self):
        assert len(parse_dataset("[]", mode="predict")) == 0
        with pytest.raises(DatasetValidationError):
            parse_dataset("[]", mode="train")

    def test_malformed_json(self):
        with pytest.raises(DatasetParseError):
            parse_dataset("{not json")

    def test_fixture_counts(self, tiny_dataset):
        # hand-count oracle over the fixture
        assert len(tiny_dataset) == 3
        assert [len(c) for c in tiny_dataset.conversations] == [2, 1, 3]
        assert [len(c.gold_pairs) for c in tiny_dataset.conversations] == [2, 1, 2]
        assert tiny_dataset.emotions == ("anger", "joy", "neutral", "sadness")
        assert tiny_dataset.conversations[0].gold_pairs[1].span == (0, 4)

    def test_predict_mode_drops_gold(self, tiny_dataset):
        doc = to_canonical_json(tiny_dataset)
        ds = parse_dataset(doc, mode="predict")
        assert all(u.gold_emotion is None for c in ds.conversations for u in c.utterances)
        assert all(not c.gold_pairs for c in ds.conversations)

    def test_pair_out_of_range(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "hi", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [["2_joy", "1"]],
                }
            ]
        )
        with pytest.raises(DatasetValidationError, match="outside"):
            parse_dataset(doc)

    def test_pair_emotion_must_match_effect(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "hi", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [["1_anger", "1"]],
                }
            ]
        )
        with pytest.raises(DatasetValidationError, match="does not match"):
            parse_dataset(doc)

    def test_duplicate_pair(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "hi there", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [["1_joy", "1_0_1"], ["1_joy", "1_1_2"]],
                }
            ]
        )
        with pytest.raises(DatasetValidationError, match="duplicate"):
            parse_dataset(doc)

    def test_utterance_ids_must_be_contiguous(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 2, "text": "hi", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [],
                }
            ]
        )
        with pytest.raises(DatasetValidationError, match="out of order"):
            parse_dataset(doc)

    def test_empty_utterance_rejected(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "   ", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [],
                }
            ]
        )
        with pytest.raises(DatasetValidationError, match="no tokens"):
            parse_dataset(doc)

    def test_missing_emotion_in_train_mode(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [{"utterance_ID": 1, "text": "hi", "speaker": "a"}],
                    "emotion-cause_pairs": [],
                }
            ]
        )
        with pytest.raises(DatasetValidationError, match="missing its emotion"):
            parse_dataset(doc)

    def test_round_trip(self, tiny_dataset):
        doc = to_canonical_json(tiny_dataset)
        again = parse_dataset(doc)
        assert again.conversations == tiny_dataset.conversations
        assert again.emotions == tiny_dataset.emotions

    def test_round_trip_synthetic(self):
        ds = make_synthetic_dataset(6, seed=3)
        again = parse_dataset(to_canonical_json(ds))
        assert again.conversations == ds.conversations
        assert again.emotions == ds.emotions


class TestSplitDataset:
    def test_sizes(self):
        ds = make_synthetic_dataset(100, seed=1)
        train, dev = split_dataset(ds, 0.15, seed=7)
        assert len(dev) == 15 and len(train) == 85

    def test_paper_scale_rounding(self):
        # split size for the full corpus scale: round(0.15 * 1375) = 206
        assert round(0.15 * 1375) == 206

    def test_determinism_and_partition(self):
        ds = make_synthetic_dataset(20, seed=2)
        a = split_dataset(ds, 0.25, seed=9)
        b = split_dataset(ds, 0.25, seed=9)
        assert a == b
        train, dev = a
        ids = sorted(c.id for c in train.conversations) + sorted(c.id for c in dev.conversations)
        assert sorted(ids) == sorted(c.id for c in ds.conversations)
        assert not ({c.id for c in train.conversations} & {c.id for c in dev.conversations})

    def test_different_seed_changes_split(self):
        ds = make_synthetic_dataset(20, seed=2)
        a = split_dataset(ds, 0.25, seed=1)
        b = split_dataset(ds, 0.25, seed=2)
        assert {c.id for c in a[1].conversations} != {c.id for c in b[1].conversations}

    def test_empty_split_rejected(self):
        ds = make_synthetic_dataset(3, seed=0)
        with pytest.raises(ValueError):
            split_dataset(ds, 0.01, seed=0)
        with pytest.raises(ValueError):
            split_dataset(ds, 0.99, seed=0)
        with pytest.raises(ValueError):
            split_dataset(ds, 1.5, seed=0)


class TestGoldTargets:
    def test_self_pair(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "what a gift", "speaker": "a", "emotion": "joy"}
                    ],
                    "emotion-cause_pairs": [["1_joy", "1_0_2"]],
                }
            ]
        )
        ds = parse_dataset(doc)
        a, lab, s = gold_targets(ds.conversations[0], ds.emotions)
        np.testing.assert_array_equal(a, [[1]])
        np.testing.assert_array_equal(lab, [[ds.emotions.index("joy")]])
        np.testing.assert_array_equal(s[0, 0], [1, 1, 0])

    def test_no_pairs(self):
        doc = json.dumps(
            [
                {
                    "conversation_ID": "c",
                    "conversation": [
                        {"utterance_ID": 1, "text": "hi", "speaker": "a", "emotion": "neutral"},
                        {"utterance_ID": 2, "text": "yo", "speaker": "b", "emotion": "neutral"},
                    ],
                    "emotion-cause_pairs": [],
                }
            ]
        )
        ds = parse_dataset(doc)
        a, lab, s = gold_targets(ds.conversations[0], ds.emotions)
        assert not a.any()
        np.testing.assert_array_equal(lab, -1)
        assert not s.any()

    def test_chain_matches_hand_drawing(self, tiny_dataset):
        # tv_3: utterance 2 causes sadness in 2 and in 3, span tokens [0, 4)
        conv = tiny_dataset.conversations[2]
        a, lab, s = gold_targets(conv, tiny_dataset.emotions)
        sad_id = tiny_dataset.emotions.index("sadness")
        np.testing.assert_array_equal(a, [[0, 0, 0], [0, 1, 1], [0, 0, 0]])
        np.testing.assert_array_equal(lab, [[-1, -1, -1], [-1, sad_id, sad_id], [-1, -1, -1]])
        assert s[1, 1, :4].all() and s[1, 2, :4].all()
        assert not s[0].any() and not s[2].any()

    def test_inverse_consistency(self):
        ds = make_synthetic_dataset(8, seed=5)
        for conv in ds.conversations:
            a, lab, s = gold_targets(conv, ds.emotions)
            rebuilt = set()
            for i, j in zip(*np.nonzero(a)):
                span_idx = np.nonzero(s[i, j])[0]
                span = (int(span_idx[0]), int(span_idx[-1]) + 1) if span_idx.size else None
                rebuilt.add((i + 1, j + 1, ds.emotions[lab[i, j]], span))
            want = {(p.cause_index, p.effect_index, p.emotion, p.span) for p in conv.gold_pairs}
            assert rebuilt == want


def test_build_vocabulary_reserved_ids(tiny_dataset):
    vocab = build_vocabulary(tiny_dataset)
    assert vocab["<pad>"] == 0 and vocab["<unk>"] == 1 and vocab["<cls>"] == 2
    assert min(v for k, v in vocab.items() if k not in ("<pad>", "<unk>", "<cls>")) == 3
    assert len(set(vocab.values())) == len(vocab)
    assert "happy" in vocab

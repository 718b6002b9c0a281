"""Post-processing: thresholded arcs, summed label argmax, leftmost/
rightmost spans, and the exact gold round-trip."""

from __future__ import annotations

import numpy as np
import pytest

from convcause.autodiff import Tensor
from convcause.data import gold_targets
from convcause.decoder import CauseGraphScores
from convcause.postprocess import (
    DecodeConfig,
    assemble_predictions,
    decode_arcs,
    decode_conversation,
    decode_emotions,
    decode_span,
    logits_from_targets,
)
from tests.conftest import random_gold_conversation

EMOTIONS = ("anger", "joy", "neutral", "sadness")


class TestDecodeArcs:
    def test_all_below_threshold(self):
        assert decode_arcs(np.full((3, 3), -1.0), DecodeConfig()) == []

    def test_self_arcs_allowed(self):
        g = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert decode_arcs(g, DecodeConfig()) == [(1, 1), (2, 2)]

    def test_matches_filter_oracle_and_monotone(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            m = int(rng.integers(1, 6))
            g = rng.standard_normal((m, m))
            t = float(rng.uniform(-1, 1))
            got = set(decode_arcs(g, DecodeConfig(arc_threshold=t)))
            want = {(i + 1, j + 1) for i in range(m) for j in range(m) if g[i, j] > t}
            assert got == want
            higher = set(decode_arcs(g, DecodeConfig(arc_threshold=t + 0.3)))
            assert higher <= got

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            decode_arcs(np.array([[np.nan]]), DecodeConfig())


class TestDecodeEmotions:
    def test_single_arc_argmax(self):
        lab = np.zeros((1, 1, 2))
        lab[0, 0] = [0.1, 0.9]
        per_utt, per_arc = decode_emotions(lab, [(1, 1)], ("anger", "joy"), DecodeConfig())
        assert per_utt == ["joy"] and per_arc == {(1, 1): "joy"}

    def test_sum_then_argmax(self):
        # individually both causes favor emotion 0; the sum favors emotion 1
        lab = np.zeros((2, 2, 2))
        lab[0, 0] = [0.6, 0.5]
        lab[1, 0] = [0.0, 0.2]
        per_utt, _ = decode_emotions(lab, [(1, 1), (2, 1)], ("e0", "e1"), DecodeConfig())
        assert per_utt[0] == "e1"

    def test_tie_breaks_to_lowest_id(self):
        lab = np.zeros((1, 1, 3))
        per_utt, _ = decode_emotions(lab, [(1, 1)], ("a", "b", "c"), DecodeConfig())
        assert per_utt == ["a"]

    def test_fallback_neutral_default(self):
        lab = np.zeros((1, 1, 4))
        per_utt, _ = decode_emotions(lab, [], EMOTIONS, DecodeConfig())
        assert per_utt == ["neutral"]

    def test_fallback_explicit_and_aggregate(self):
        lab = np.zeros((2, 2, 2))
        lab[:, 1, 1] = 3.0
        per_utt, _ = decode_emotions(lab, [], ("a", "b"), DecodeConfig(fallback_emotion="a"))
        assert per_utt == ["a", "a"]
        per_utt, _ = decode_emotions(lab, [], ("a", "b"), DecodeConfig())
        assert per_utt == ["a", "b"]  # highest aggregate score per column

    def test_unknown_fallback_rejected(self):
        with pytest.raises(ValueError):
            decode_emotions(np.zeros((1, 1, 2)), [], ("a", "b"), DecodeConfig(fallback_emotion="zz"))


class TestDecodeSpan:
    def test_interior_dip_included(self):
        assert decode_span(np.array([-1.0, 2.0, -1.0, 3.0, -1.0]), DecodeConfig()) == (1, 4)

    def test_all_below(self):
        assert decode_span(np.array([-1.0, -2.0]), DecodeConfig()) is None

    def test_single_token(self):
        assert decode_span(np.array([-1.0, -1.0, 0.5]), DecodeConfig()) == (2, 3)


class TestAssemblePredictions:
    def test_empty(self, tiny_dataset):
        conv = tiny_dataset.conversations[0]
        assert assemble_predictions(conv, [], {}, {}) == []

    def test_full_utterance_fallback_span(self, tiny_dataset):
        conv = tiny_dataset.conversations[0]  # utterance 1 has 5 tokens
        preds = assemble_predictions(conv, [(1, 2)], {(1, 2): "joy"}, {(1, 2): None})
        assert preds[0].span == (0, 5)

    def test_pair_mode_strips_spans(self, tiny_dataset):
        conv = tiny_dataset.conversations[0]
        preds = assemble_predictions(
            conv, [(1, 2)], {(1, 2): "joy"}, {(1, 2): (1, 3)}, span_mode=False
        )
        assert preds[0].span is None

    def test_sorted_by_effect_then_cause(self, tiny_dataset):
        conv = tiny_dataset.conversations[2]
        arcs = [(3, 3), (1, 3), (2, 1)]
        preds = assemble_predictions(
            conv, arcs, {a: "sadness" for a in arcs}, {a: (0, 1) for a in arcs}
        )
        assert [(p.cause_index, p.effect_index) for p in preds] == [(2, 1), (1, 3), (3, 3)]


def scores_from_conversation(conv, emotions):
    a, lab, s = gold_targets(conv, emotions)
    g, lab_logits, s_logits = logits_from_targets(a, lab, s, n_emotions=len(emotions))
    return CauseGraphScores(
        arc=Tensor(g),
        label=Tensor(lab_logits),
        span=Tensor(s_logits),
        lengths=tuple(len(u.tokens) for u in conv.utterances),
    )


class TestGoldRoundTrip:
    def test_round_trip_many_random_graphs(self):
        rng = np.random.default_rng(42)
        for k in range(100):
            conv = random_gold_conversation(rng, EMOTIONS, conv_id=f"c{k}")
            scores = scores_from_conversation(conv, EMOTIONS)
            pairs, per_utt = decode_conversation(conv, scores, EMOTIONS)
            want = sorted(conv.gold_pairs, key=lambda p: (p.effect_index, p.cause_index))
            assert pairs == list(want), f"mismatch on graph {k}"
            # one emotion per effect utterance, spans contiguous and in bounds
            for p in pairs:
                assert p.emotion == per_utt[p.effect_index - 1]
                lo, hi = p.span
                assert 0 <= lo < hi <= len(conv.utterances[p.cause_index - 1].tokens)

    def test_round_trip_pair_mode(self):
        rng = np.random.default_rng(7)
        conv = random_gold_conversation(rng, EMOTIONS, with_spans=False)
        scores = scores_from_conversation(conv, EMOTIONS)
        pairs, _ = decode_conversation(conv, scores, EMOTIONS, span_mode=False)
        want = {(p.cause_index, p.effect_index, p.emotion) for p in conv.gold_pairs}
        assert {(p.cause_index, p.effect_index, p.emotion) for p in pairs} == want
        assert all(p.span is None for p in pairs)

"""Command-line surface: exit codes, artifacts, determinism, input
immutability."""

from __future__ import annotations

import hashlib
import json

import pytest

from convcause.cli import main
from convcause.data import parse_dataset, to_canonical_json
from convcause.synthetic import make_stub_text_features, make_synthetic_dataset
from convcause.uft import write_uft1

TRAIN_ARGS = [
    "--mode", "toy", "--epochs", "4", "--patience", "4", "--seed", "3",
    "--dev-fraction", "0.25", "--d-g", "12", "--d-text", "16",
    "--n-layers", "1", "--n-heads", "2", "--d-speaker", "4", "--dropout", "0.0",
]


@pytest.fixture
def corpus_file(tmp_path):
    ds = make_synthetic_dataset(8, seed=0)
    path = tmp_path / "corpus.json"
    path.write_text(to_canonical_json(ds))
    return path


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_train(corpus_file, out_dir, extra=()):
    return main(
        ["train", "--data", str(corpus_file), "--out", str(out_dir), *TRAIN_ARGS, *extra]
    )


class TestTrain:
    def test_writes_checkpoint_log_manifest(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "run1"
        assert run_train(corpus_file, out) == 0
        assert (out / "checkpoint.uft1").exists()
        assert (out / "checkpoint.json").exists()
        assert (out / "train_log.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert str(corpus_file) in manifest["inputs"]
        assert manifest["inputs"][str(corpus_file)] == sha(corpus_file)
        assert "best dev weighted F" in capsys.readouterr().out

    def test_missing_feature_file_exit_2(self, corpus_file, tmp_path, capsys):
        code = main(
            ["train", "--data", str(corpus_file), "--out", str(tmp_path / "x"),
             "--mode", "precomputed", "--text-features", str(tmp_path / "none.uft1")]
        )
        assert code == 2
        assert "none.uft1" in capsys.readouterr().err

    def test_missing_data_exit_2(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "no.json"), "--out", str(tmp_path)]) == 2

    def test_determinism_replay(self, corpus_file, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_train(corpus_file, out1)
        run_train(corpus_file, out2)
        assert (out1 / "train_log.json").read_text() == (out2 / "train_log.json").read_text()
        assert sha(out1 / "checkpoint.uft1") == sha(out2 / "checkpoint.uft1")

    def test_does_not_mutate_inputs(self, corpus_file, tmp_path):
        before = sha(corpus_file)
        run_train(corpus_file, tmp_path / "run")
        assert sha(corpus_file) == before

    def test_precomputed_mode_end_to_end(self, corpus_file, tmp_path):
        ds = make_synthetic_dataset(8, seed=0)
        feat = tmp_path / "text.uft1"
        write_uft1(feat, make_stub_text_features(ds, 12, seed=1), dim=12)
        out = tmp_path / "pre"
        code = main(
            ["train", "--data", str(corpus_file), "--out", str(out), "--mode", "precomputed",
             "--text-features", str(feat), "--epochs", "2", "--patience", "2",
             "--d-g", "8", "--lr", "1e-3", "--dropout", "0.0", "--d-speaker", "4",
             "--dev-fraction", "0.25", "--seed", "1"]
        )
        assert code == 0
        sidecar = json.loads((out / "checkpoint.json").read_text())
        assert sidecar["config"]["encoder"]["mode"] == "precomputed"
        assert sidecar["config"]["encoder"]["d_text"] == 12


class TestPredictEvalInspect:
    @pytest.fixture
    def trained(self, corpus_file, tmp_path):
        out = tmp_path / "run"
        assert run_train(corpus_file, out) == 0
        return out / "checkpoint"

    def test_predict_happy_path(self, trained, corpus_file, tmp_path):
        preds = tmp_path / "preds.json"
        code = main(
            ["predict", "--checkpoint", str(trained), "--data", str(corpus_file), "--out", str(preds)]
        )
        assert code == 0
        ds = parse_dataset(preds.read_bytes())  # predictions satisfy data invariants
        assert len(ds) == 8
        assert (tmp_path / "preds.json.manifest.json").exists()

    def test_predict_pair_mode(self, trained, corpus_file, tmp_path):
        preds = tmp_path / "pairs.json"
        assert main(
            ["predict", "--checkpoint", str(trained), "--data", str(corpus_file),
             "--out", str(preds), "--pair-mode"]
        ) == 0
        ds = parse_dataset(preds.read_bytes())
        assert all(p.span is None for c in ds.conversations for p in c.gold_pairs)

    def test_predict_bad_checkpoint_exit_2(self, corpus_file, tmp_path):
        assert main(
            ["predict", "--checkpoint", str(tmp_path / "nope"), "--data", str(corpus_file),
             "--out", str(tmp_path / "p.json")]
        ) == 2

    def test_predict_determinism(self, trained, corpus_file, tmp_path):
        a, b = tmp_path / "p1.json", tmp_path / "p2.json"
        for p in (a, b):
            main(["predict", "--checkpoint", str(trained), "--data", str(corpus_file), "--out", str(p)])
        assert a.read_text() == b.read_text()

    def test_eval_gold_vs_gold(self, corpus_file, capsys):
        code = main(
            ["eval", "--pred", str(corpus_file), "--gold", str(corpus_file), "--json"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["weighted"] == {"precision": 1.0, "recall": 1.0, "f1": 1.0}

    def test_eval_disjoint_zero(self, corpus_file, tmp_path, capsys):
        import dataclasses

        ds = make_synthetic_dataset(8, seed=0)
        shifted = []
        for conv in ds.conversations:
            # gold pairs in this corpus always have cause <= effect, so a
            # single (cause=m, effect=1) prediction never matches any of them
            m = len(conv)
            pairs = (
                dataclasses.replace(
                    conv.gold_pairs[0],
                    cause_index=m,
                    effect_index=1,
                    emotion=conv.utterances[0].gold_emotion,
                    span=(0, 1),
                ),
            )
            shifted.append(dataclasses.replace(conv, gold_pairs=pairs))
        pred_path = tmp_path / "shifted.json"
        pred_path.write_text(to_canonical_json(dataclasses.replace(ds, conversations=tuple(shifted))))
        code = main(["eval", "--pred", str(pred_path), "--gold", str(corpus_file), "--json"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["weighted"] == {"precision": 0.0, "recall": 0.0, "f1": 0.0}

    def test_eval_conversation_mismatch_exit_2(self, corpus_file, tmp_path, capsys):
        ds = make_synthetic_dataset(3, seed=9)
        other = tmp_path / "other.json"
        other.write_text(to_canonical_json(ds))
        assert main(["eval", "--pred", str(other), "--gold", str(corpus_file)]) == 2
        assert "mismatch" in capsys.readouterr().err

    def test_eval_threads_flag(self, corpus_file, capsys):
        code = main(
            ["eval", "--pred", str(corpus_file), "--gold", str(corpus_file), "--threads", "3", "--json"]
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["weighted"]["f1"] == 1.0

    def test_eval_report_file_and_manifest(self, corpus_file, tmp_path):
        out = tmp_path / "report.json"
        assert main(
            ["eval", "--pred", str(corpus_file), "--gold", str(corpus_file), "--out", str(out)]
        ) == 0
        assert json.loads(out.read_text())["weighted"]["f1"] == 1.0
        assert (tmp_path / "report.json.manifest.json").exists()

    def test_inspect(self, trained, capsys):
        assert main(["inspect", "--checkpoint", str(trained)]) == 0
        out = capsys.readouterr().out
        assert "biaffine.label_w" in out and "total" in out

    def test_inspect_missing_exit_2(self, tmp_path):
        assert main(["inspect", "--checkpoint", str(tmp_path / "none")]) == 2


def test_config_file_defaults(corpus_file, tmp_path):
    cfg = tmp_path / "defaults.toml"
    cfg.write_text('[train]\nepochs = 2\npatience = 2\n"d-g" = 8\nd_text = 16\n')
    out = tmp_path / "cfgrun"
    code = main(
        ["--config", str(cfg), "train", "--data", str(corpus_file), "--out", str(out),
         "--mode", "toy", "--seed", "1", "--dev-fraction", "0.25",
         "--n-layers", "1", "--n-heads", "2", "--d-speaker", "4", "--dropout", "0.0"]
    )
    assert code == 0
    log = json.loads((out / "train_log.json").read_text())
    assert len(log["epochs"]) <= 2
    sidecar = json.loads((out / "checkpoint.json").read_text())
    assert sidecar["config"]["d_g"] == 8

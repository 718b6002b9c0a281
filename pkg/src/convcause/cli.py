"""Operator command line: train, predict, eval and inspect.

Exit codes: 0 success, 1 internal error, 2 user error (bad inputs,
mismatched files). Defaults may come from a TOML config file; explicit
flags always win. Every file-producing run writes a JSON manifest next to
its outputs and writes output files atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .data import (
    Dataset,
    DatasetParseError,
    DatasetValidationError,
    build_vocabulary,
    parse_dataset,
    split_dataset,
    to_canonical_json,
)
from .encoder import EncoderConfig
from .metrics import MODES, evaluate, pairs_by_conversation
from .model import EmotionCauseModel, FeatureBundle, ModelConfig
from .postprocess import DecodeConfig, decode_conversation
from .training import TrainConfig, fit
from .uft import UftFormatError, read_uft1

__all__ = ["main"]


class UserError(Exception):
    """Invalid invocation or inputs; reported with exit code 2."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(path: Path, command: str, config: dict, inputs: list[Path], outputs: list[Path]) -> None:
    manifest = {
        "tool": f"convcause {__version__}",
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    _atomic_write_text(path, json.dumps(manifest, indent=1))


def _load_dataset(path: Path, mode: str) -> Dataset:
    if not path.exists():
        raise UserError(f"dataset file not found: {path}")
    try:
        return parse_dataset(path.read_bytes(), mode=mode)
    except (DatasetParseError, DatasetValidationError) as exc:
        raise UserError(f"{path}: {exc}") from exc


def _load_features(args: argparse.Namespace, expect_text: bool) -> FeatureBundle | None:
    paths = {
        "text": getattr(args, "text_features", None),
        "visual": getattr(args, "visual_features", None),
        "audio": getattr(args, "audio_features", None),
    }
    if not any(paths.values()):
        if expect_text:
            raise UserError("precomputed mode requires --text-features")
        return None
    records = {}
    for kind, p in paths.items():
        if p is None:
            continue
        p = Path(p)
        if not p.exists():
            raise UserError(f"missing {kind} feature file: {p}")
        try:
            records[kind], _ = read_uft1(p)
        except UftFormatError as exc:
            raise UserError(str(exc)) from exc
    if expect_text and "text" not in records:
        raise UserError("precomputed mode requires --text-features")
    return FeatureBundle(**records)


def _config_defaults(path: str | None, section: str) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise UserError(f"config file not found: {p}")
    with open(p, "rb") as fh:
        table = tomllib.load(fh)
    defaults = dict(table.get(section, {}))
    for key in list(defaults):
        if "-" in key:
            defaults[key.replace("-", "_")] = defaults.pop(key)
    return defaults


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    data_path = Path(args.data)
    dataset = _load_dataset(data_path, "train")
    try:
        train, dev = split_dataset(dataset, args.dev_fraction, args.seed)
    except ValueError as exc:
        raise UserError(str(exc)) from exc

    features = _load_features(args, expect_text=args.mode == "precomputed")
    if args.mode == "precomputed":
        _, d_text = read_uft1(Path(args.text_features))
        vocab = None
    else:
        d_text = args.d_text
        vocab = build_vocabulary(train)
    enc = EncoderConfig(
        mode=args.mode,
        d_text=d_text,
        n_layers=args.n_layers,
        n_heads=args.n_heads,
        dropout=args.dropout,
        use_visual=args.visual_features is not None,
        use_audio=args.audio_features is not None,
        d_visual=args.d_visual,
        d_audio=args.d_audio,
        d_speaker=args.d_speaker,
    )
    model = EmotionCauseModel(
        ModelConfig(encoder=enc, d_g=args.d_g, dropout=args.dropout),
        emotions=dataset.emotions,
        vocabulary=vocab,
        seed=args.seed,
    )
    cfg = TrainConfig(
        lr=args.lr,
        epochs=args.epochs,
        patience=args.patience,
        seed=args.seed,
        clip_max_norm=args.clip_max_norm,
        weight_decay=args.weight_decay,
        dev_metric_mode=args.dev_metric,
    )
    log = fit(model, train, dev, cfg, features=features)

    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_base = out_dir / "checkpoint"
    weights_path, sidecar_path = model.save_checkpoint(ckpt_base)
    log_path = out_dir / "train_log.json"
    _atomic_write_text(log_path, json.dumps(log.to_json_dict(), indent=1))
    inputs = [data_path] + [
        Path(p) for p in (args.text_features, args.visual_features, args.audio_features) if p
    ]
    _write_manifest(
        out_dir / "manifest.json",
        "train",
        {k: v for k, v in vars(args).items() if k != "func"},
        inputs,
        [weights_path, sidecar_path, log_path],
    )
    print(f"best dev weighted F ({cfg.dev_metric_mode}) = {log.best_f1:.4f} at epoch {log.best_epoch}")
    print(f"checkpoint: {weights_path}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    ckpt_base = Path(args.checkpoint)
    if not ckpt_base.with_suffix(".json").exists():
        raise UserError(f"checkpoint sidecar not found: {ckpt_base.with_suffix('.json')}")
    try:
        model = EmotionCauseModel.load_checkpoint(ckpt_base)
    except (ValueError, UftFormatError) as exc:
        raise UserError(f"cannot load checkpoint: {exc}") from exc
    dataset = _load_dataset(Path(args.data), "predict")
    features = _load_features(args, expect_text=model.config.encoder.mode == "precomputed")
    decode_cfg = DecodeConfig(arc_threshold=args.arc_threshold, span_threshold=args.span_threshold)

    out_conversations = []
    for conv in dataset.conversations:
        try:
            scores = model.forward(conv, features=features, training=False)
        except (KeyError, ValueError) as exc:
            raise UserError(f"conversation {conv.id}: {exc}") from exc
        pairs, utt_emotions = decode_conversation(
            conv, scores, model.emotions, decode_cfg, span_mode=not args.pair_mode
        )
        utterances = tuple(
            dataclasses.replace(u, gold_emotion=e) for u, e in zip(conv.utterances, utt_emotions)
        )
        out_conversations.append(
            dataclasses.replace(conv, utterances=utterances, gold_pairs=tuple(pairs))
        )
    out_ds = Dataset(conversations=tuple(out_conversations), emotions=model.emotions)
    out_path = Path(args.out)
    _atomic_write_text(out_path, to_canonical_json(out_ds))
    inputs = [Path(args.data), ckpt_base.with_suffix(".uft1"), ckpt_base.with_suffix(".json")]
    inputs += [Path(p) for p in (args.text_features, args.visual_features, args.audio_features) if p]
    _write_manifest(
        out_path.with_name(out_path.name + ".manifest.json"),
        "predict",
        {k: v for k, v in vars(args).items() if k != "func"},
        inputs,
        [out_path],
    )
    print(f"wrote predictions for {len(out_ds)} conversations to {out_path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gold = _load_dataset(Path(args.gold), "train")
    pred = _load_dataset(Path(args.pred), "train")
    gold_ids = {c.id for c in gold.conversations}
    pred_ids = {c.id for c in pred.conversations}
    if gold_ids != pred_ids:
        missing = sorted(gold_ids - pred_ids)
        unknown = sorted(pred_ids - gold_ids)
        raise UserError(
            f"conversation-id mismatch: missing from predictions: {missing}; unknown: {unknown}"
        )
    prf = evaluate(
        pairs_by_conversation(pred), pairs_by_conversation(gold), mode=args.mode, threads=args.threads
    )
    if args.json:
        report = json.dumps(prf.to_json_dict(), indent=1)
    else:
        report = f"mode: {args.mode}\n{prf.format_table()}"
    print(report)
    if args.out:
        out_path = Path(args.out)
        _atomic_write_text(out_path, json.dumps(prf.to_json_dict(), indent=1))
        _write_manifest(
            out_path.with_name(out_path.name + ".manifest.json"),
            "eval",
            {k: v for k, v in vars(args).items() if k != "func"},
            [Path(args.gold), Path(args.pred)],
            [out_path],
        )
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    base = Path(args.checkpoint)
    sidecar_path = base.with_suffix(".json")
    if not sidecar_path.exists():
        raise UserError(f"checkpoint sidecar not found: {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    shapes = sidecar.get("shapes", {})
    total = 0
    print(f"checkpoint: {base}")
    print(f"emotions: {', '.join(sidecar.get('emotions', []))}")
    enc = sidecar.get("config", {}).get("encoder", {})
    print(f"encoder mode: {enc.get('mode')}  d_text: {enc.get('d_text')}  d_g: {sidecar['config']['d_g']}")
    print(f"{'parameter':<28} {'shape':<18} {'count':>10}")
    for name in sorted(shapes):
        shape = tuple(shapes[name])
        count = int(np_prod(shape))
        total += count
        print(f"{name:<28} {str(shape):<18} {count:>10d}")
    print(f"{'total':<28} {'':<18} {total:>10d}")
    return 0


def np_prod(shape: tuple[int, ...]) -> int:
    out = 1
    for s in shape:
        out *= s
    return out


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser(config_defaults) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convcause",
        description="Emotion-cause graph prediction over multi-party conversations.",
    )
    parser.add_argument("--config", help="TOML file with per-subcommand defaults", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model and write a checkpoint")
    t.add_argument("--data", required=True, help="training dataset JSON")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--mode", choices=("toy", "precomputed"), default="toy")
    t.add_argument("--dev-fraction", type=float, default=0.15)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--patience", type=int, default=10)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--d-g", type=int, default=64)
    t.add_argument("--d-text", type=int, default=64, help="toy encoder width")
    t.add_argument("--n-layers", type=int, default=2)
    t.add_argument("--n-heads", type=int, default=4)
    t.add_argument("--dropout", type=float, default=0.1)
    t.add_argument("--d-speaker", type=int, default=16)
    t.add_argument("--d-visual", type=int, default=128)
    t.add_argument("--d-audio", type=int, default=128)
    t.add_argument("--clip-max-norm", type=float, default=1.0)
    t.add_argument("--weight-decay", type=float, default=0.01)
    t.add_argument("--dev-metric", choices=MODES, default="strict")
    t.add_argument("--text-features", default=None, help="UFT1 word-level text features")
    t.add_argument("--visual-features", default=None)
    t.add_argument("--audio-features", default=None)
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="decode predictions from a checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint base path (without suffix)")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pair-mode", action="store_true", help="omit spans from the output")
    p.add_argument("--arc-threshold", type=float, default=0.0)
    p.add_argument("--span-threshold", type=float, default=0.0)
    p.add_argument("--text-features", default=None)
    p.add_argument("--visual-features", default=None)
    p.add_argument("--audio-features", default=None)
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("eval", help="score predictions against gold annotations")
    e.add_argument("--pred", required=True)
    e.add_argument("--gold", required=True)
    e.add_argument("--mode", choices=MODES, default="strict")
    e.add_argument("--json", action="store_true", help="print a JSON report")
    e.add_argument("--out", default=None, help="also write the JSON report here")
    e.add_argument("--threads", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="dump checkpoint shapes and parameter counts")
    i.add_argument("--checkpoint", required=True)
    i.set_defaults(func=cmd_inspect)

    for name, sp in (("train", t), ("predict", p), ("eval", e), ("inspect", i)):
        sp.set_defaults(**config_defaults.get(name, {}))
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # peek at --config so its values become subparser defaults
    config_path = None
    for k, arg in enumerate(argv):
        if arg == "--config" and k + 1 < len(argv):
            config_path = argv[k + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    try:
        defaults = {
            section: _config_defaults(config_path, section)
            for section in ("train", "predict", "eval", "inspect")
        }
        parser = _build_parser(defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

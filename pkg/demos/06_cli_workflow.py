"""Walkthrough: the operator command line, end to end in a temp directory.

Run: python demos/06_cli_workflow.py   (about half a minute)
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from convcause import make_synthetic_dataset, to_canonical_json


def run(*args):
    cmd = [sys.executable, "-m", "convcause", *args]
    print(f"$ convcause {' '.join(args)}")
    out = subprocess.run(cmd, capture_output=True, text=True)
    if out.stdout:
        print("\n".join("  " + line for line in out.stdout.strip().splitlines()[:12]))
    if out.returncode != 0:
        print(out.stderr)
        raise SystemExit(out.returncode)


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    data = tmp / "corpus.json"
    # enough conversations that the cue/trigger patterns generalize to the
    # held-out split, not just memorize
    data.write_text(to_canonical_json(make_synthetic_dataset(48, seed=0)))

    run(
        "train", "--data", str(data), "--out", str(tmp / "run"),
        "--mode", "toy", "--epochs", "60", "--patience", "20", "--seed", "7",
        "--dev-fraction", "0.25", "--d-g", "24", "--d-text", "32",
        "--n-layers", "1", "--n-heads", "2", "--d-speaker", "8",
    )
    run("inspect", "--checkpoint", str(tmp / "run" / "checkpoint"))
    run(
        "predict", "--checkpoint", str(tmp / "run" / "checkpoint"),
        "--data", str(data), "--out", str(tmp / "preds.json"),
    )
    run("eval", "--pred", str(tmp / "preds.json"), "--gold", str(data), "--mode", "strict")

    manifest = json.loads((tmp / "run" / "manifest.json").read_text())
    print(f"\nrun manifest records {len(manifest['inputs'])} input hash(es) and {len(manifest['outputs'])} outputs")

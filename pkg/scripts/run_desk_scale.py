#!/usr/bin/env python3
"""Full desk-scale experiment: synth -> extract -> train -> eval -> plots.

Reproduces the end-to-end acceptance run with adjustable knobs and leaves
every artifact (dataset, feature files, checkpoint, report, ROC SVG) in
the output directory. With the defaults this takes a few minutes on one
CPU core.
"""

import argparse
import json
import os
import sys

from dhnet import cli


def sh(argv):
    print("+ dhnet " + " ".join(argv), file=sys.stderr)
    code = cli.main(argv)
    if code != 0:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="desk_scale_run")
    ap.add_argument("--n-planes", type=int, default=2000)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--epochs", type=int, default=16)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--channels", type=int, nargs=3, default=(8, 16, 32))
    ap.add_argument("--strides", type=int, nargs=3, default=(2, 1, 1))
    ap.add_argument("--dense", type=int, nargs=2, default=(64, 32))
    ap.add_argument("--bn-momentum", type=float, default=0.9)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    data = os.path.join(args.out, "data")
    cfg = os.path.join(args.out, "run.toml")
    with open(cfg, "w") as fh:
        fh.write(f"[synth]\nsize = [{args.size}, {args.size}]\n")

    sh(["--config", cfg, "synth", "--out", data,
        "--n-planes", str(args.n_planes), "--seed", str(args.seed)])

    feats = {}
    for split in ("train", "val", "test"):
        feats[split] = os.path.join(args.out, f"{split}.dhf1")
        sh(["extract", os.path.join(data, f"{split}.jsonl"), "--out", feats[split]])

    ckpt = os.path.join(args.out, "model.dhw1")
    sh(["train",
        "--train-features", feats["train"], "--val-features", feats["val"],
        "--out", ckpt, "--epochs", str(args.epochs), "--seed", str(args.seed),
        "--channels", *map(str, args.channels),
        "--strides", *map(str, args.strides),
        "--dense", *map(str, args.dense),
        "--bn-momentum", str(args.bn_momentum),
        "--verbose"])

    report = os.path.join(args.out, "report.json")
    scores = os.path.join(args.out, "scores.csv")
    sh(["eval", "--checkpoint", ckpt, "--features", feats["test"],
        "--out", report, "--scores-csv", scores])
    sh(["plot", scores, "--kind", "roc", "--out", os.path.join(args.out, "roc.svg")])
    sh(["plot", scores, "--kind", "series", "--out", os.path.join(args.out, "scores.svg")])

    print(json.dumps({"report": json.load(open(report)), "out": args.out}, indent=2))


if __name__ == "__main__":
    main()

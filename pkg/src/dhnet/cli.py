"""Command-line surface: synth, ingest, extract, train, eval, detect, encode, plot.

Every subcommand is a thin composition of module operations, deterministic
for a fixed seed. Failures print a machine-readable JSON object to stderr
and exit nonzero; exit codes distinguish usage errors, I/O errors, and a
missing external encoder.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import detector, plot
from .encode import EncoderFailedError, EncoderJob, EncoderMissingError, run_encode
from .features import FeatureRecord, extract_all, read_features, write_features
from .frame_io import FrameRecord, load_manifest, load_plane, write_manifest
from .intra_quant import QUANT_TABLES
from .model import (
    StreamConfig,
    TrainConfig,
    load_model,
    predict_labels,
    records_to_batch,
    save_model,
    train,
)
from .synth import SynthConfig, synthesize_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ENCODER_MISSING = 3
EXIT_ENCODER_FAILED = 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EXIT_IO) from exc
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"invalid TOML config: {exc}") from exc


def _opt(args, config, section, key, default):
    """Option precedence: command-line flag > config file > built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(section, {}).get(key, default)


def _quant_table(q_m_id):
    if q_m_id not in QUANT_TABLES:
        raise CliError(f"unknown quantization matrix id {q_m_id!r}")
    return QUANT_TABLES[q_m_id]


def _write_scores_csv(path, rows):
    """Score series CSV: frame_index,score,label."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index", "score", "label"])
        for r in rows:
            writer.writerow([r["frame_index"], f"{r['score']:.6f}", r["label"]])


def _read_scores_csv(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            rows = []
            for row in reader:
                rows.append(
                    {
                        "frame_index": int(row["frame_index"]),
                        "score": float(row["score"]),
                        "label": int(row["label"]),
                    }
                )
    except OSError as exc:
        raise CliError(f"cannot read CSV: {exc}", EXIT_IO) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed scores CSV {path}: {exc}") from exc
    if not rows:
        raise CliError(f"empty scores CSV {path}")
    return rows


# -- subcommands -------------------------------------------------------------


def cmd_synth(args, config) -> int:
    cfg = SynthConfig(
        n_planes=_opt(args, config, "synth", "n_planes", 2000),
        size=tuple(_opt(args, config, "synth", "size", (256, 256))),
        q_values=tuple(_opt(args, config, "synth", "q_values", (3, 5, 7))),
        q_m_id=_opt(args, config, "synth", "q_m_id", "Q2"),
        gop_size=_opt(args, config, "synth", "gop_size", 6),
        seed=_opt(args, config, "synth", "seed", 0),
    )
    info = synthesize_dataset(args.out, cfg)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def cmd_ingest(args, config) -> int:
    _quant_table(args.q_m_id)
    names = sorted(
        f for f in os.listdir(args.frames) if f.lower().endswith((".pgm", ".png"))
    )
    if not names:
        raise CliError(f"no .pgm/.png frames found in {args.frames}", EXIT_IO)
    records = [
        FrameRecord(
            path=name,
            label=args.label,
            q_s_last=args.q_s,
            q_m_id=args.q_m_id,
            gop_size=args.gop_size,
            frame_index=i,
        )
        for i, name in enumerate(names)
    ]
    write_manifest(records, args.out)
    print(json.dumps({"records": len(records), "manifest": args.out}))
    return EXIT_OK


def cmd_extract(args, config) -> int:
    records = load_manifest(args.manifest)
    base = os.path.dirname(os.path.abspath(args.manifest))
    out_records = []
    for rec in records:
        path = rec.path if os.path.isabs(rec.path) else os.path.join(base, rec.path)
        plane = load_plane(path)
        h4, h8, h16, aux = extract_all(plane, _quant_table(rec.q_m_id), rec.q_s_last)
        out_records.append(FeatureRecord(rec.label, rec.q_s_last, (h4, h8, h16), aux))
    write_features(out_records, args.out)
    print(json.dumps({"records": len(out_records), "features": args.out}))
    return EXIT_OK


def cmd_train(args, config) -> int:
    train_records = read_features(args.train_features)
    val_records = read_features(args.val_features)
    train_cfg = TrainConfig(
        batch_size=_opt(args, config, "train", "batch_size", 32),
        epochs=_opt(args, config, "train", "epochs", 60),
        lr=_opt(args, config, "train", "lr", 1e-4),
        weight_decay=_opt(args, config, "train", "weight_decay", 1e-4),
        seed=_opt(args, config, "train", "seed", 0),
    )
    stream_cfg = StreamConfig(
        channels=tuple(_opt(args, config, "train", "channels", (32, 64, 128))),
        strides=tuple(_opt(args, config, "train", "strides", (1, 1, 1))),
        dense=tuple(_opt(args, config, "train", "dense", (512, 256))),
        bn_momentum=_opt(args, config, "train", "bn_momentum", 0.99),
    )
    verbose = bool(getattr(args, "verbose", False))
    model, history = train(
        train_records,
        val_records,
        train_cfg,
        stream_cfg,
        log=(lambda h: print(json.dumps(h), file=sys.stderr)) if verbose else None,
    )
    save_model(model, args.out)
    best = max(h["val_acc"] for h in history)
    print(json.dumps({"checkpoint": args.out, "best_val_acc": best}))
    return EXIT_OK


def cmd_eval(args, config) -> int:
    model, _ = load_model(args.checkpoint)
    records = read_features(args.features)
    scores = []
    for i in range(0, len(records), 256):
        batch, _ = records_to_batch(records[i : i + 256])
        scores.extend(model.predict_scores(batch).tolist())
    scores = np.array(scores)
    truths = np.array([r.label for r in records])
    counts = detector.confusion_from_predictions(predict_labels(scores), truths)
    metrics = detector.compute_metrics(counts)
    roc = detector.roc_auc(scores, truths)
    report = {
        k: (round(v, 2) if v is not None else None) for k, v in metrics.items()
    }
    report["auc"] = round(roc.auc, 4)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if args.scores_csv:
        _write_scores_csv(
            args.scores_csv,
            [
                {"frame_index": i, "score": s, "label": int(t)}
                for i, (s, t) in enumerate(zip(scores, truths))
            ],
        )
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _detect_frames(args):
    """Resolve the frame list (and per-frame quant metadata) for detect."""
    if os.path.isdir(args.frames):
        names = sorted(
            f for f in os.listdir(args.frames) if f.lower().endswith((".pgm", ".png"))
        )
        if not names:
            raise CliError(f"no frames found in {args.frames}", EXIT_IO)
        return [os.path.join(args.frames, n) for n in names], args.q_s, args.q_m_id, args.gop_size
    records = load_manifest(args.frames)
    if not records:
        raise CliError(f"empty manifest {args.frames}")
    base = os.path.dirname(os.path.abspath(args.frames))
    paths = [
        r.path if os.path.isabs(r.path) else os.path.join(base, r.path)
        for r in records
    ]
    return paths, records[0].q_s_last, records[0].q_m_id, records[0].gop_size


def cmd_detect(args, config) -> int:
    model, _ = load_model(args.checkpoint)
    paths, q_s, q_m_id, gop_size = _detect_frames(args)
    q_m = _quant_table(q_m_id)
    mode = args.mode

    if mode == "first-iframe":
        result = detector.first_iframe_detect(paths, model, q_m, q_s)
    elif mode == "frame":
        result = {"frames": detector.temporal_scan(paths, model, q_m, q_s)}
    elif mode == "temporal":
        rows = detector.temporal_scan(paths, model, q_m, q_s)
        ok = [r for r in rows if "error" not in r]
        if args.out:
            _write_scores_csv(args.out, ok)
        result = {"frames": rows}
    elif mode == "gop":
        from .frame_io import iframe_indices

        idxs = iframe_indices(gop_size, len(paths))[: args.phi]
        frames = []
        for i in idxs:
            r = detector.first_iframe_detect([paths[i]], model, q_m, q_s)
            r["frame_index"] = i
            frames.append(r)
        result = {
            "frames": frames,
            "phi": len(frames),
            "label": detector.gop_vote([f["label"] for f in frames]),
        }
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown mode {mode!r}")
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_encode(args, config) -> int:
    job = EncoderJob(
        input_path=args.input,
        output_path=args.out,
        q_s=args.q_s,
        gop_size=args.gop_size,
        extra_args=args.extra or [],
    )
    info = run_encode(job, frames_dir=args.frames_dir)
    print(json.dumps({"video": info["video"], "n_frames": len(info.get("frames", []))}))
    return EXIT_OK


def cmd_plot(args, config) -> int:
    rows = _read_scores_csv(args.input)
    base, _ = os.path.splitext(args.out)
    if args.kind == "series":
        svg = plot.series_svg([(r["frame_index"], r["score"]) for r in rows])
        _write_scores_csv(base + ".csv", rows)
    else:
        # label column holds ground truth when plotting an ROC
        roc = detector.roc_auc(
            [r["score"] for r in rows], [r["label"] for r in rows]
        )
        svg = plot.roc_svg(roc.points, roc.auc)
        with open(base + ".csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fpr", "tpr"])
            for x, y in roc.points:
                writer.writerow([f"{x:.6f}", f"{y:.6f}"])
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(json.dumps({"svg": args.out, "csv": base + ".csv"}))
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhnet",
        description="Double MPEG-4 compression detection toolkit",
    )
    parser.add_argument("--config", help="TOML config file ([synth]/[train]/[detect])")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic compressed dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-planes", dest="n_planes", type=int)
    p.add_argument("--q-values", dest="q_values", type=int, nargs="+")
    p.add_argument("--q-m-id", dest="q_m_id", choices=sorted(QUANT_TABLES))
    p.add_argument("--gop-size", dest="gop_size", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="build a manifest from a directory of frames")
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--label", type=int, required=True, choices=(0, 1))
    p.add_argument("--q-s", dest="q_s", type=int, required=True)
    p.add_argument("--q-m-id", dest="q_m_id", default="Q1")
    p.add_argument("--gop-size", dest="gop_size", type=int, default=6)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="extract features from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the classifier on feature files")
    p.add_argument("--train-features", required=True)
    p.add_argument("--val-features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--channels", type=int, nargs=3)
    p.add_argument("--strides", type=int, nargs=3)
    p.add_argument("--dense", type=int, nargs=2)
    p.add_argument("--bn-momentum", dest="bn_momentum", type=float)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a feature file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scores-csv", dest="scores_csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("detect", help="run detection on frames or a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--frames", required=True, help="frame directory or manifest")
    p.add_argument(
        "--mode", choices=("frame", "gop", "temporal", "first-iframe"), default="frame"
    )
    p.add_argument("--phi", type=int, default=5)
    p.add_argument("--q-s", dest="q_s", type=int, default=3)
    p.add_argument("--q-m-id", dest="q_m_id", default="Q1")
    p.add_argument("--gop-size", dest="gop_size", type=int, default=6)
    p.add_argument("--out", help="scores CSV output (temporal mode)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("encode", help="run the external encoder (optional)")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--q-s", dest="q_s", type=int, required=True)
    p.add_argument("--gop-size", dest="gop_size", type=int, default=6)
    p.add_argument("--frames-dir", dest="frames_dir")
    p.add_argument("--extra", nargs="*")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("plot", help="render an SVG from a scores CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("roc", "series"), default="series")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except CliError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return exc.code
    except EncoderMissingError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_ENCODER_MISSING
    except EncoderFailedError as exc:
        print(json.dumps({"error": str(exc), "log": exc.log[-2000:]}), file=sys.stderr)
        return EXIT_ENCODER_FAILED
    except OSError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Batch command-line frontend.

Subcommands chain into the usual offline workflow:

    extract -> train -> predict -> eval / fuse        and       bench

Every command is reproducible given identical inputs and --seed; outputs are
machine-readable (CSV or JSON). Exit codes: 0 success, 1 fatal input error,
2 partial success (some clips failed during extraction).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench_harness import ConstraintGate, check_constraint, time_pipeline
from .clip_io import CANONICAL_SPECS, load_frame_dir, parse_y4m, synth_clip
from .errors import JoinError, VqaError
from .eval_metrics import evaluate
from .pipelines import PIPELINE_NAMES, build_pipeline
from .regressors import (
    BranchNet,
    ForestModel,
    TrainConfig,
    finetune_mos,
    fit_forest,
    init_branchnet,
    load_model,
    predict_forest,
    predict_scores,
    save_model,
    train_siamese,
)
from .sampling import TEMPORAL_MODES, SpatialTransform, temporal_sample
from .scoring import FusionSpec, fuse_scores
from .signal_features import (
    FEATURE_ORDER,
    extract_clip_features,
    features_to_json,
    read_features_csv,
    write_features_csv,
)
from .tables import read_score_table, write_score_table

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="global RNG seed")
    p.add_argument("--threads", type=int, default=os.cpu_count(),
                   help="worker threads (never changes outputs)")
    p.add_argument("--config", type=str, default=None,
                   help="JSON file of defaults; keys match flag names")


def _parse_spatial(s: str) -> SpatialTransform:
    parts = s.split(":")
    kind = parts[0]
    if kind == "none":
        return SpatialTransform()
    if kind == "resize":
        return SpatialTransform.resize(int(parts[1]), int(parts[2]))
    if kind == "pad_square":
        return SpatialTransform.pad_square_then_resize(int(parts[1]))
    if kind == "fragment":
        if len(parts) == 3:
            return SpatialTransform.fragment(int(parts[1]), int(parts[2]))
        return SpatialTransform.fragment()
    raise ValueError(f"unknown spatial transform {s!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="vqakit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vqakit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("extract", help="extract clip-level signal features")
    p.add_argument("--input", required=True, help="y4m file, directory of y4m files, "
                   "or directory of PGM/PPM frames (one clip)")
    p.add_argument("--temporal", choices=TEMPORAL_MODES, default="all")
    p.add_argument("--spatial", default="none",
                   help="none | resize:W:H | pad_square:S | fragment[:GRID:PATCH]")
    p.add_argument("--fps", type=int, default=30, help="fps for frame directories")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", "--output", required=True)
    _add_common(p)
    commands["extract"] = p

    p = sub.add_parser("train", help="train a quality regressor")
    p.add_argument("--features", nargs="+", required=True, help="feature CSV per dataset")
    p.add_argument("--mos", nargs="+", required=True, help="MOS CSV per dataset")
    p.add_argument("--mode", choices=("siamese+finetune", "forest"), default="forest")
    p.add_argument("--out", "--output", required=True, help="checkpoint JSON path")
    p.add_argument("--epochs", type=int, default=60, help="fine-tune epochs")
    p.add_argument("--siamese-epochs", type=int, default=None,
                   help="rank-pretraining epochs (default: same as --epochs)")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--weight-decay", type=float, default=0.05)
    p.add_argument("--embed-dim", type=int, default=8)
    p.add_argument("--head-hidden", type=int, default=4)
    p.add_argument("--trees", type=int, default=300)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=2)
    _add_common(p)
    commands["train"] = p

    p = sub.add_parser("predict", help="score clips from a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", "--output", required=True)
    _add_common(p)
    commands["predict"] = p

    p = sub.add_parser("eval", help="correlation metrics of scores vs MOS")
    p.add_argument("--pred", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", "--output", default=None)
    _add_common(p)
    commands["eval"] = p

    p = sub.add_parser("fuse", help="weighted fusion of per-model score CSVs")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--weights", nargs="+", type=float, required=True)
    p.add_argument("--normalization", choices=("none", "zscore"), default="none")
    p.add_argument("--out", "--output", required=True)
    _add_common(p)
    commands["fuse"] = p

    p = sub.add_parser("bench", help="runtime/MACs benchmark on a synthetic clip")
    p.add_argument("--pipeline", choices=PIPELINE_NAMES, default="feature-forest")
    p.add_argument("--spec", choices=tuple(CANONICAL_SPECS), default="30-FHD")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--budget-ms", type=float, default=1000.0)
    p.add_argument("--trees", type=int, default=300)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", "--output", default=None)
    _add_common(p)
    commands["bench"] = p

    return parser, commands


# --- extract ------------------------------------------------------------------

def _collect_clips(path: Path, fps: int):
    """Yield (clip_id, loader) pairs for a file or directory input."""
    if path.is_file():
        return [(path.stem, lambda p=path: parse_y4m(p.read_bytes()))]
    if path.is_dir():
        y4ms = sorted(p for p in path.iterdir() if p.suffix.lower() == ".y4m")
        if y4ms:
            return [(p.stem, lambda p=p: parse_y4m(p.read_bytes())) for p in y4ms]
        frames = [p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".ppm")]
        if frames:
            return [(path.name, lambda: load_frame_dir(path, fps))]
    return []


def cmd_extract(args) -> int:
    spatial = _parse_spatial(args.spatial)
    clips = _collect_clips(Path(args.input), args.fps)
    if not clips:
        print(f"error: no readable clips under {args.input}", file=sys.stderr)
        return EXIT_FATAL

    rows, failures = [], []
    for clip_id, loader in clips:
        try:
            clip = loader()
            plan = temporal_sample(clip, args.temporal)
            fv = extract_clip_features(clip, plan, spatial,
                                       seed=args.seed, threads=args.threads)
            rows.append((clip_id, fv))
        except (VqaError, ValueError, OSError) as e:
            failures.append((clip_id, e))
            print(f"{clip_id}: {e}", file=sys.stderr)

    if not rows:
        print("error: every clip failed", file=sys.stderr)
        return EXIT_FATAL
    if args.format == "json":
        Path(args.out).write_text(features_to_json(rows))
    else:
        write_features_csv(args.out, rows)
    return EXIT_PARTIAL if failures else EXIT_OK


# --- train --------------------------------------------------------------------

def _load_dataset(features_csv: str, mos_csv: str):
    ids, X = read_features_csv(features_csv)
    mos = read_score_table(mos_csv, "mos")
    for cid in ids:
        if cid not in mos:
            raise JoinError(cid)
    y = np.array([mos[c] for c in ids], dtype=np.float64)
    return ids, X, y


def cmd_train(args) -> int:
    if len(args.features) != len(args.mos):
        print("error: need one --mos file per --features file", file=sys.stderr)
        return EXIT_FATAL
    datasets = [_load_dataset(f, m) for f, m in zip(args.features, args.mos)]
    log_path = Path(str(args.out) + ".log")
    log_entries: list[dict] = []

    if args.mode == "forest":
        X = np.concatenate([d[1] for d in datasets], axis=0)
        y = np.concatenate([d[2] for d in datasets])
        model = fit_forest(X, y, n_trees=args.trees, seed=args.seed,
                           max_depth=args.max_depth, min_leaf=args.min_leaf,
                           threads=args.threads, feature_names=FEATURE_ORDER)
        save_model(args.out, model)
        log_entries.append({"phase": "forest", "n_trees": model.n_trees,
                            "rows": int(X.shape[0]), "nodes": model.node_count()})
    else:
        net = init_branchnet(embed_dim=args.embed_dim, head_hidden=args.head_hidden,
                             seed=args.seed)
        siamese_epochs = args.epochs if args.siamese_epochs is None else args.siamese_epochs
        base = dict(learning_rate=args.lr, batch_size=args.batch_size, seed=args.seed,
                    rank_margin=args.margin, weight_decay=args.weight_decay)
        train_siamese([(X, y) for _, X, y in datasets], net,
                      TrainConfig(epochs=siamese_epochs, **base), history=log_entries)
        finetune_mos((datasets[0][1], datasets[0][2]), net,
                     TrainConfig(epochs=args.epochs, **base), history=log_entries)
        save_model(args.out, net)

    log_path.write_text("".join(json.dumps(e) + "\n" for e in log_entries))
    return EXIT_OK


# --- predict ------------------------------------------------------------------

def cmd_predict(args) -> int:
    model = load_model(args.model)
    ids, X = read_features_csv(args.features)
    if isinstance(model, ForestModel):
        scores = predict_forest(model, X)
        scores = np.atleast_1d(scores)
    elif isinstance(model, BranchNet):
        scores = predict_scores(model, X)
    else:  # pragma: no cover - load_model only returns the two kinds
        print(f"error: unsupported model {type(model)}", file=sys.stderr)
        return EXIT_FATAL
    write_score_table(args.out, dict(zip(ids, map(float, scores))))
    return EXIT_OK


# --- eval ---------------------------------------------------------------------

def cmd_eval(args) -> int:
    report = evaluate(args.pred, args.mos)
    if args.format == "csv":
        lines = ["metric,value"] + [
            f"{k},{round(getattr(report, k), 6)}" for k in ("srocc", "krocc", "plcc", "rmse")
        ]
        text = "\n".join(lines) + "\n"
    else:
        text = report.to_json()
    print(text.rstrip("\n"))
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


# --- fuse ---------------------------------------------------------------------

def cmd_fuse(args) -> int:
    if len(args.pred) != len(args.weights):
        print("error: need one weight per prediction file", file=sys.stderr)
        return EXIT_FATAL
    tables = [read_score_table(p, "score") for p in args.pred]
    ids = list(tables[0])
    for p, t in zip(args.pred[1:], tables[1:]):
        if set(t) != set(ids):
            print(f"error: {p} covers different clip ids", file=sys.stderr)
            return EXIT_FATAL
    lists = [np.array([t[c] for c in ids]) for t in tables]
    fused = fuse_scores(lists, FusionSpec(tuple(args.weights), args.normalization))
    write_score_table(args.out, dict(zip(ids, map(float, fused))))
    return EXIT_OK


# --- bench --------------------------------------------------------------------

def cmd_bench(args) -> int:
    spec = CANONICAL_SPECS[args.spec]
    pipeline = build_pipeline(args.pipeline, spec, seed=args.seed,
                              threads=args.threads, n_trees=args.trees)
    clip = synth_clip(spec, "noise", seed=args.seed)
    report = time_pipeline(pipeline, clip, warmup=args.warmup, runs=args.runs,
                           spec_label=spec.label, budget_ms=args.budget_ms)
    verdict = check_constraint(report, ConstraintGate(spec.label, args.budget_ms))

    if args.format == "csv":
        text = ("pipeline,spec,runtime_ms,macs_g,params_m,pass\n"
                f"{pipeline.name},{report.clip_spec},{report.runtime_ms!r},"
                f"{report.macs_g!r},{report.params_m!r},{report.constraint_pass}\n")
    else:
        text = report.to_json()
    print(text.rstrip("\n"))
    print(f"{spec.label}: mean {report.runtime_ms:.2f} ms over {len(report.runtime_runs)} "
          f"runs ({report.warmup_runs} warmup), budget {args.budget_ms:.0f} ms -> "
          f"{'PASS' if verdict.passed else 'FAIL'} (margin {verdict.margin_ms:.2f} ms)",
          file=sys.stderr)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


_HANDLERS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "fuse": cmd_fuse,
    "bench": cmd_bench,
}


def _apply_config(argv, parser, commands):
    """Re-parse with a --config JSON file as subcommand defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    sub = commands[args.command]
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        parser.error(f"cannot read config {args.config}: {e}")
    dests = {a.dest for a in sub._actions}
    unknown = set(cfg) - dests
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser, commands = build_parser()
    args = _apply_config(argv if argv is not None else sys.argv[1:], parser, commands)
    try:
        return _HANDLERS[args.command](args)
    except VqaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    raise SystemExit(main())

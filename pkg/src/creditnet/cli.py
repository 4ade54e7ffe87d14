"""Command-line entry point for data prep, training, sweeps, and reports.

One merged JSON config file (``model`` / ``train`` / ``schema`` / ``split`` /
``winsorize`` / ``data`` sections) drives every subcommand; command-line
flags override file values. Every run directory receives a ``manifest.json``
with the fully resolved config, seeds, input hash, and package version.

Exit codes: 0 success, 1 usage/config error, 2 data/schema error, 3 numeric
error (divergence or NaN).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .data import (
    SchemaConfig,
    SplitSpec,
    apply_preprocess,
    load_csv,
    prepare_splits,
    synth_generate,
    synth_preset,
    SYNTH_PRESETS,
)
from .errors import (
    ConfigError,
    DataError,
    LeakageError,
    NumericError,
    SchemaError,
    UndefinedMetricError,
)
from .importance import permutation_importance
from .metrics import evaluate_scores
from .model import ModelConfig, load_checkpoint, save_checkpoint
from .training import (
    TrainConfig,
    ablate,
    bce_loss,
    predict_probs,
    stable_hash,
    sweep_lr,
    sweep_optimizer,
    train,
    write_curves_csv,
)

DATA_DIR_ENV = "CREDITNET_DATA_DIR"
DEFAULT_DATA_FILE = "cs-training.csv"
DEFAULT_LR_GRID = (0.005, 0.003, 0.002, 0.001)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def read_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return cfg


def resolve_data_path(args) -> Path:
    if getattr(args, "data", None):
        return Path(args.data)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env) / DEFAULT_DATA_FILE
    raise UsageError(
        f"--data not given and {DATA_DIR_ENV} is unset; nothing to load"
    )


def load_frame(path: Path, cfg: dict):
    """Load a CSV resolving the schema (explicit, partial, or inferred)."""
    if not Path(path).is_file():
        raise DataError(f"no such data file: {path}")
    section = cfg.get("schema") or {}
    subsample = (cfg.get("data") or {}).get("subsample")
    sub_seed = int((cfg.get("data") or {}).get("subsample_seed", 0))
    if section.get("feature_columns"):
        schema = SchemaConfig.from_dict(section)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        header = [h.strip().strip('"') for h in header]
        label = section.get("label_column", "label")
        imputation = section.get("imputation", "median")
        markers = section.get("missing_markers")
        if markers is None:
            schema = SchemaConfig.infer(header, label, imputation=imputation)
        else:
            schema = SchemaConfig.infer(header, label, markers, imputation)
    frame = load_csv(path, schema, subsample=subsample, seed=sub_seed)
    return frame, schema


def build_model_config(cfg: dict, n_features: int, seed_override=None) -> ModelConfig:
    section = dict(cfg.get("model") or {})
    section["n_features"] = n_features
    if seed_override is not None:
        section["seed"] = int(seed_override)
    return ModelConfig.from_dict(section)


def build_train_config(cfg: dict, seed_override=None) -> TrainConfig:
    section = dict(cfg.get("train") or {})
    if seed_override is not None:
        section["seed"] = int(seed_override)
    return TrainConfig.from_dict(section)


def build_split_spec(cfg: dict, seed_override=None) -> SplitSpec:
    section = dict(cfg.get("split") or {})
    if seed_override is not None:
        section["seed"] = int(seed_override)
    fractions = tuple(section.get("fractions", (0.7, 0.15, 0.15)))
    return SplitSpec(fractions=fractions, seed=int(section.get("seed", 0)),
                     stratified=bool(section.get("stratified", True)))


def winsor_quantiles(cfg: dict):
    section = cfg.get("winsorize")
    if not section:
        return None
    return (float(section["lower_quantile"]), float(section["upper_quantile"]))


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def write_manifest(out_dir: Path, command: str, args, resolved: dict,
                   data_path: Path | None, t0: float) -> None:
    manifest = {
        "command": command,
        "package_version": __version__,
        "resolved_config": resolved,
        "config_hash": stable_hash(resolved),
        "data_path": None if data_path is None else str(data_path),
        "data_sha256": None if data_path is None else sha256_file(data_path),
        "seed_override": getattr(args, "seed", None),
        "wall_clock_seconds": time.perf_counter() - t0,
    }
    write_json(out_dir / "manifest.json", manifest)


def prepare_out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def prepared_splits_from_args(args, cfg):
    data_path = resolve_data_path(args)
    frame, schema = load_frame(data_path, cfg)
    split_spec = build_split_spec(cfg, args.seed)
    splits, pre_stats = prepare_splits(frame, schema, split_spec, winsor_quantiles(cfg))
    return data_path, frame, schema, split_spec, splits, pre_stats


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    t0 = time.perf_counter()
    cfg = read_config_file(args.config)
    out = prepare_out_dir(args)
    data_path, frame, schema, split_spec, splits, pre_stats = \
        prepared_splits_from_args(args, cfg)

    model_cfg = build_model_config(cfg, frame.n_features, args.seed)
    train_cfg = build_train_config(cfg, args.seed)
    model, report = train(model_cfg, train_cfg, splits)

    write_json(out / "report.json", {"kind": "train", **report.to_dict()})
    write_curves_csv(report, out / "curves.csv")
    save_checkpoint(out / "checkpoint.bin", model,
                    preprocess=pre_stats.to_dict(),
                    extra={"schema": schema.to_dict()})
    resolved = {
        "model": model_cfg.to_dict(),
        "train": train_cfg.to_dict(),
        "schema": schema.to_dict(),
        "split": {"fractions": list(split_spec.fractions),
                  "seed": split_spec.seed, "stratified": split_spec.stratified},
        "winsorize": cfg.get("winsorize"),
        "data": cfg.get("data") or {},
    }
    write_manifest(out, "train", args, resolved, data_path, t0)
    test = report.final["test"]
    print(f"train: done in {report.epochs_run} epochs; "
          f"test acc={test.acc:.4f} auc={test.auc:.4f} ks={test.ks:.4f}")
    return EXIT_OK


def _load_checkpoint_with_preprocess(path):
    model, header = load_checkpoint(path)
    pre = header.get("preprocess")
    if pre is None:
        raise ConfigError(f"checkpoint {path} lacks preprocessing statistics")
    from .data import PreprocessStats

    schema_dict = (header.get("extra") or {}).get("schema")
    return model, PreprocessStats.from_dict(pre), schema_dict


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    cfg = read_config_file(args.config)
    out = prepare_out_dir(args)
    model, pre_stats, schema_dict = _load_checkpoint_with_preprocess(args.checkpoint)
    if schema_dict and not (cfg.get("schema") or {}).get("feature_columns"):
        cfg = {**cfg, "schema": schema_dict}
    data_path = resolve_data_path(args)
    frame, schema = load_frame(data_path, cfg)
    prepared = apply_preprocess(frame, pre_stats)
    probs = predict_probs(model, prepared.X)
    loss, _ = bce_loss(probs, prepared.y)
    metrics = evaluate_scores(probs, prepared.y)
    write_json(out / "report.json", {
        "kind": "eval",
        "checkpoint": str(args.checkpoint),
        "n_rows": prepared.n_rows,
        "loss": loss,
        "metrics": metrics.to_dict(),
    })
    write_manifest(out, "eval", args, {"model": model.config.to_dict(),
                                       "schema": schema.to_dict()}, data_path, t0)
    print(f"eval: n={prepared.n_rows} acc={metrics.acc:.4f} "
          f"auc={metrics.auc:.4f} ks={metrics.ks:.4f}")
    return EXIT_OK


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list: {text!r}") from None
    if not values:
        raise UsageError(f"empty {what} list")
    return values


def cmd_sweep_lr(args) -> int:
    t0 = time.perf_counter()
    cfg = read_config_file(args.config)
    out = prepare_out_dir(args)
    data_path, frame, schema, split_spec, splits, _ = \
        prepared_splits_from_args(args, cfg)
    model_cfg = build_model_config(cfg, frame.n_features, args.seed)
    train_cfg = build_train_config(cfg, args.seed)
    lrs = _parse_float_list(args.lrs, "learning-rate")
    rows = sweep_lr(model_cfg, train_cfg, lrs, splits)
    write_json(out / "report.json", {"kind": "sweep-lr", "rows": rows})
    write_manifest(out, "sweep-lr", args,
                   {"model": model_cfg.to_dict(), "train": train_cfg.to_dict(),
                    "lrs": lrs}, data_path, t0)
    for row in rows:
        _print_sweep_row(row, f"lr={row['lr']}")
    return EXIT_OK


def cmd_sweep_opt(args) -> int:
    t0 = time.perf_counter()
    cfg = read_config_file(args.config)
    out = prepare_out_dir(args)
    data_path, frame, schema, split_spec, splits, _ = \
        prepared_splits_from_args(args, cfg)
    model_cfg = build_model_config(cfg, frame.n_features, args.seed)
    train_cfg = build_train_config(cfg, args.seed)
    lrs = _parse_float_list(args.lrs, "learning-rate")
    optimizers = [tok.strip() for tok in args.optimizers.split(",") if tok.strip()]
    rows = sweep_optimizer(model_cfg, train_cfg, lrs, splits, optimizers)
    write_json(out / "report.json", {"kind": "sweep-opt", "rows": rows})
    write_manifest(out, "sweep-opt", args,
                   {"model": model_cfg.to_dict(), "train": train_cfg.to_dict(),
                    "lrs": lrs, "optimizers": optimizers}, data_path, t0)
    for row in rows:
        _print_sweep_row(row, f"{row['optimizer']} lr={row['lr']}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    t0 = time.perf_counter()
    cfg = read_config_file(args.config)
    out = prepare_out_dir(args)
    data_path, frame, schema, split_spec, splits, _ = \
        prepared_splits_from_args(args, cfg)
    model_cfg = build_model_config(cfg, frame.n_features, args.seed)
    train_cfg = build_train_config(cfg, args.seed)
    rows = ablate(model_cfg, train_cfg, splits)
    write_json(out / "report.json", {"kind": "ablate", "rows": rows})
    write_manifest(out, "ablate", args,
                   {"model": model_cfg.to_dict(), "train": train_cfg.to_dict()},
                   data_path, t0)
    for row in rows:
        _print_sweep_row(row, row["variant"])
    return EXIT_OK


def cmd_importance(args) -> int:
    t0 = time.perf_counter()
    cfg = read_config_file(args.config)
    out = prepare_out_dir(args)
    model, pre_stats, schema_dict = _load_checkpoint_with_preprocess(args.checkpoint)
    if schema_dict and not (cfg.get("schema") or {}).get("feature_columns"):
        cfg = {**cfg, "schema": schema_dict}
    data_path = resolve_data_path(args)
    frame, schema = load_frame(data_path, cfg)
    prepared = apply_preprocess(frame, pre_stats)
    report = permutation_importance(model, prepared, metric=args.metric,
                                    repeats=args.repeats,
                                    seed=0 if args.seed is None else args.seed)
    (out / "importance.csv").write_text(report.to_csv(), encoding="utf-8")
    write_json(out / "report.json", {"kind": "importance", **report.to_dict()})
    write_manifest(out, "importance", args, {"model": model.config.to_dict(),
                                             "metric": args.metric,
                                             "repeats": args.repeats},
                   data_path, t0)
    top = report.entries[0]
    print(f"importance: baseline {report.metric}={report.baseline:.4f}; "
          f"top feature {top.name} (drop {top.mean_drop:.4f})")
    return EXIT_OK


def cmd_synth(args) -> int:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    spec = synth_preset(args.spec, args.n_features)
    seed = 0 if args.seed is None else args.seed
    frame, bayes = synth_generate(args.n, args.n_features, seed, spec)

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join([*frame.feature_names, "label"]) + "\n")
        for i in range(frame.n_rows):
            cells = [repr(float(v)) for v in frame.X[i]]
            fh.write(",".join([*cells, str(int(frame.y[i]))]) + "\n")

    from .metrics import auc as auc_fn
    meta = {
        "n": args.n,
        "n_features": args.n_features,
        "seed": seed,
        "spec": args.spec,
        "generator": {
            "linear": list(spec.linear),
            "pairs": [list(p) for p in spec.pairs],
            "motifs": [list(m) for m in spec.motifs],
        },
        "bayes_auc": auc_fn(bayes, frame.y) if 0 < frame.y.sum() < frame.n_rows else None,
        "positive_rate": float(frame.y.mean()),
    }
    write_json(Path(str(out_path) + ".meta.json"), meta)
    print(f"synth: wrote {frame.n_rows} rows to {out_path} "
          f"(bayes auc {meta['bayes_auc']})")
    return EXIT_OK


def _print_sweep_row(row: dict, label: str) -> None:
    if row.get("status") != "ok":
        print(f"{label}: FAILED ({row.get('error', 'unknown')})")
        return
    m = row["metrics"]["test"]
    print(f"{label}: acc={m['acc']:.4f} auc={m['auc']:.4f} ks={m['ks']:.4f}")


def cmd_report(args) -> int:
    path = Path(args.run) / "report.json"
    if not path.exists():
        raise DataError(f"no report.json in {args.run}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    kind = payload.get("kind", "unknown")
    print(f"# {kind} report ({path})")
    if kind == "train":
        for split_name, m in payload["final"].items():
            print(f"{split_name:6s} acc={m['acc']:.4f} auc={m['auc']:.4f} "
                  f"ks={m['ks']:.4f} (n_pos={m['n_pos']}, n_neg={m['n_neg']})")
        print(f"epochs_run={payload['epochs_run']} best_epoch={payload['best_epoch']}")
    elif kind in ("sweep-lr", "sweep-opt", "ablate"):
        for row in payload["rows"]:
            label = row.get("variant") or " ".join(
                f"{k}={row[k]}" for k in ("optimizer", "lr") if k in row)
            _print_sweep_row(row, label)
    elif kind == "eval":
        m = payload["metrics"]
        print(f"n={payload['n_rows']} loss={payload['loss']:.4f} "
              f"acc={m['acc']:.4f} auc={m['auc']:.4f} ks={m['ks']:.4f}")
    elif kind == "importance":
        for entry in payload["features"]:
            print(f"{entry['feature']:24s} {entry['mean_drop']:+0.4f} "
                  f"(std {entry['std_drop']:.4f})")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="creditnet",
                     description="Hybrid CNN+Transformer credit-default experiments")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    def common(p, data=True):
        p.add_argument("--config", help="merged JSON config file")
        if data:
            p.add_argument("--data", help=f"CSV path (default: ${DATA_DIR_ENV}/"
                                          f"{DEFAULT_DATA_FILE})")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override every seed in the run")

    p = sub.add_parser("train", help="train one model")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a CSV")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-lr", help="learning-rate sensitivity table")
    common(p)
    p.add_argument("--lrs", default=",".join(str(x) for x in DEFAULT_LR_GRID))
    p.set_defaults(func=cmd_sweep_lr)

    p = sub.add_parser("sweep-opt", help="optimizer x learning-rate grid")
    common(p)
    p.add_argument("--lrs", default=",".join(str(x) for x in DEFAULT_LR_GRID))
    p.add_argument("--optimizers", default="sgd,adam")
    p.set_defaults(func=cmd_sweep_opt)

    p = sub.add_parser("ablate", help="cnn_only / transformer_only / hybrid table")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("importance", help="permutation feature importance")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--metric", default="auc", choices=("auc", "accuracy"))
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("synth", help="generate a synthetic CSV with known Bayes score")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-features", type=int, default=10)
    p.add_argument("--spec", default="strong-single",
                   help=f"one of {', '.join(SYNTH_PRESETS)}")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="pretty-print a run directory's report.json")
    p.add_argument("--run", required=True, help="run directory")
    p.set_defaults(func=cmd_report)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, DataError, LeakageError, UndefinedMetricError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

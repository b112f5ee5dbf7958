"""Command-line entry point.

Subcommands: train, crossval, project, explain, evaluate, gradcheck.
Configuration comes from a JSON file (--config) with flag overrides;
precedence is flags > file > defaults.  The fully resolved configuration is
written next to every artifact so each run is reproducible from its output
directory alone.  Exit codes: 0 success, 2 config error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .data import load_dataset, split_folds
from .errors import ConfigError, DataError, NumericalError, ProtosarcError
from .explain import ProjectedModel, ProjectionInfo, evaluate, explain, project_prototypes
from .losses import LossWeights
from .model import load_checkpoint, save_checkpoint
from .synthetic import random_instance
from .training import TrainConfig, cross_validate, finite_diff_check, train

DEFAULTS = {
    "train": None, "val": None, "test": None, "checkpoint": None, "out": "out",
    "seed": 0,
    "lr": 1e-4, "batch_size": 32, "accum_steps": 1,
    "max_epochs": 100, "patience": 10,
    "k_per_class": 8, "k_per_polarity": 4,
    "sigma": 2.0, "sigma_semantic": None, "sigma_sentiment": None,
    "eps": 1e-4, "hidden": 64,
    "beta1": 0.9, "beta2": 0.999, "eps_adam": 1e-8,
    "lambda1": 0.5, "lambda2": 0.1, "lambda3": 0.5, "lambda4": 1e-4,
    "lambda_thr": 0.3, "sep_sign": -1,
    "no_incongruity": False, "paper_settings": False,
    "folds": 5, "top_k": 3, "record_id": None,
    "sample_frac": None, "project_sentiment": True, "restrict_tag": True,
    "gradcheck_step": 1e-5, "gradcheck_threshold": 1e-4, "gradcheck_seed": None,
    "records_file": None,
}


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config {args.config}: {e}") from e
        unknown = [k for k in file_cfg if k not in DEFAULTS]
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            cfg[key] = flag
    if args.no_incongruity:
        cfg["no_incongruity"] = True
    if args.paper_settings:
        cfg["paper_settings"] = True
        cfg["batch_size"] = 60
        cfg["accum_steps"] = 30
        cfg["lr"] = 1e-4
    if cfg["no_incongruity"]:
        cfg["lambda3"] = 0.0
    if cfg["sep_sign"] not in (1, -1):
        raise ConfigError(f"sep_sign must be +1 or -1, got {cfg['sep_sign']}")
    return cfg


def build_train_config(cfg: dict) -> TrainConfig:
    weights = LossWeights(lambda1=cfg["lambda1"], lambda2=cfg["lambda2"],
                          lambda3=cfg["lambda3"], lambda4=cfg["lambda4"],
                          lambda_thr=cfg["lambda_thr"], sep_sign=int(cfg["sep_sign"]))
    return TrainConfig(
        lr=cfg["lr"], batch_size=int(cfg["batch_size"]), accum_steps=int(cfg["accum_steps"]),
        max_epochs=int(cfg["max_epochs"]), patience=int(cfg["patience"]),
        seed=int(cfg["seed"]), weights=weights,
        k_per_class=int(cfg["k_per_class"]), k_per_polarity=int(cfg["k_per_polarity"]),
        sigma=cfg["sigma"], sigma_semantic=cfg["sigma_semantic"],
        sigma_sentiment=cfg["sigma_sentiment"], eps=cfg["eps"], hidden=int(cfg["hidden"]),
        beta1=cfg["beta1"], beta2=cfg["beta2"], eps_adam=cfg["eps_adam"],
    )


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_effective_config(cfg: dict, out: Path) -> None:
    with open(out / "effective_config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(cfg: dict, key: str) -> str:
    if not cfg.get(key):
        raise ConfigError(f"missing required path {key!r} (set in config or via --{key})")
    return cfg[key]


def _carve_validation(ds, seed: int):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plan = split_folds(ds, 10, seed=seed + 17)
    return ds.subset(plan.other_indices(0)), ds.subset(plan.fold_indices(0))


def cmd_train(cfg: dict) -> int:
    out = _out_dir(cfg)
    train_ds = load_dataset(_require(cfg, "train"))
    if cfg["val"]:
        val_ds = load_dataset(cfg["val"])
        fit_ds = train_ds
    else:
        fit_ds, val_ds = _carve_validation(train_ds, int(cfg["seed"]))
    tc = build_train_config(cfg)
    params, history = train(fit_ds, val_ds, tc)

    with open(out / "history.jsonl", "w", encoding="utf-8") as fh:
        for ep in history.epochs:
            fh.write(json.dumps(ep.to_dict(), sort_keys=True) + "\n")
        fh.write(json.dumps({"summary": {
            "best_epoch": history.best_epoch,
            "stopped_epoch": history.stopped_epoch,
            "wall_clock_sec": history.wall_clock_sec,
            "no_incongruity": bool(cfg["no_incongruity"]),
        }}, sort_keys=True) + "\n")
    save_checkpoint(params, out / "checkpoint.json",
                    extra={"seed": cfg["seed"], "best_epoch": history.best_epoch})
    _write_effective_config(cfg, out)
    print(f"trained: best epoch {history.best_epoch}, "
          f"stopped at {history.stopped_epoch}; checkpoint at {out/'checkpoint.json'}")
    return 0


def cmd_crossval(cfg: dict) -> int:
    out = _out_dir(cfg)
    ds = load_dataset(_require(cfg, "train"))
    tc = build_train_config(cfg)
    result = cross_validate(ds, tc, k=int(cfg["folds"]))
    summary = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "seed": int(cfg["seed"]),
        "k": result.k,
        "folds": [{"fold": o.fold, "metrics": o.metrics,
                   "best_epoch": o.best_epoch, "stopped_epoch": o.stopped_epoch}
                  for o in result.folds],
        "mean": result.mean,
    }
    with open(out / "metrics_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_effective_config(cfg, out)
    print(f"crossval mean: {result.mean}")
    return 0


def cmd_project(cfg: dict) -> int:
    out = _out_dir(cfg)
    params, projection, extra = load_checkpoint(_require(cfg, "checkpoint"))
    train_ds = load_dataset(_require(cfg, "train"))
    previous = 0
    if projection is not None:
        previous = ProjectionInfo.from_dict(projection).projection_count
    model = project_prototypes(
        params, train_ds, sample_frac=cfg["sample_frac"], seed=int(cfg["seed"]),
        project_sentiment=bool(cfg["project_sentiment"]),
        restrict_tag=bool(cfg["restrict_tag"]), previous_count=previous)
    save_checkpoint(model.params, out / "checkpoint.json",
                    projection=model.projection.to_dict(), extra=extra)
    _write_effective_config(cfg, out)
    print(f"projected {len(model.projection.semantic)} semantic prototypes "
          f"(projection #{model.projection.projection_count}); "
          f"checkpoint at {out/'checkpoint.json'}")
    return 0


def _load_projected(cfg: dict) -> ProjectedModel:
    params, projection, _ = load_checkpoint(_require(cfg, "checkpoint"))
    if projection is None:
        raise DataError("checkpoint has no projection metadata; run `project` first")
    return ProjectedModel(params=params, projection=ProjectionInfo.from_dict(projection))


def cmd_explain(cfg: dict) -> int:
    out = _out_dir(cfg)
    model = _load_projected(cfg)
    data_path = cfg.get("test") or cfg.get("train")
    if not data_path:
        raise ConfigError("explain needs a data file (set test or train)")
    ds = load_dataset(data_path)
    if cfg.get("records_file"):
        try:
            with open(cfg["records_file"], "r", encoding="utf-8") as fh:
                rec_ids = [line.strip() for line in fh if line.strip()]
        except FileNotFoundError:
            raise DataError(f"records file not found: {cfg['records_file']}") from None
        if not rec_ids:
            raise DataError(f"records file {cfg['records_file']} is empty")
    elif cfg.get("record_id"):
        rec_ids = [cfg["record_id"]]
    else:
        raise ConfigError("explain needs --record-id or --records-file")
    top_k = int(cfg["top_k"])
    if top_k > model.params.bank.k_a:
        warnings.warn(f"top_k={top_k} exceeds the {model.params.bank.k_a} semantic "
                      "prototypes; clamping")
    for rec_id in rec_ids:
        rec = ds.record_by_id(rec_id)
        expl = explain(model, rec, top_k=top_k)
        with open(out / f"explanation_{rec_id}.json", "w", encoding="utf-8") as fh:
            fh.write(expl.to_json() + "\n")
        with open(out / f"explanation_{rec_id}.txt", "w", encoding="utf-8") as fh:
            fh.write(expl.to_text() + "\n")
        print(expl.to_text())
    _write_effective_config(cfg, out)
    return 0


def cmd_evaluate(cfg: dict) -> int:
    out = _out_dir(cfg)
    params, _, _ = load_checkpoint(_require(cfg, "checkpoint"))
    data_path = cfg.get("test") or cfg.get("train")
    if not data_path:
        raise ConfigError("evaluate needs a data file (set test or train)")
    ds = load_dataset(data_path)
    metrics = evaluate(params, ds)
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(metrics.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_effective_config(cfg, out)
    print(json.dumps(metrics.to_dict(), sort_keys=True))
    return 0


def cmd_gradcheck(cfg: dict) -> int:
    out = _out_dir(cfg)
    seed = cfg["gradcheck_seed"]
    seed = int(cfg["seed"]) if seed is None else int(seed)
    weights = LossWeights(lambda1=cfg["lambda1"], lambda2=cfg["lambda2"],
                          lambda3=cfg["lambda3"], lambda4=cfg["lambda4"],
                          lambda_thr=cfg["lambda_thr"], sep_sign=int(cfg["sep_sign"]))
    params, arrays = random_instance(seed)
    err, path = finite_diff_check(params, arrays, weights, step=cfg["gradcheck_step"])
    passed = err <= cfg["gradcheck_threshold"]
    report = {"max_rel_err": err, "worst_param": path,
              "threshold": cfg["gradcheck_threshold"], "step": cfg["gradcheck_step"],
              "seed": seed, "passed": bool(passed)}
    with open(out / "gradcheck.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_effective_config(cfg, out)
    print(json.dumps(report, sort_keys=True))
    if not passed:
        raise NumericalError(f"gradient check failed: max relative error {err:.3e} "
                             f"at {path} exceeds {cfg['gradcheck_threshold']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--no-incongruity", action="store_true",
                        help="force the incongruity weight to 0 (ablation switch)")
    common.add_argument("--sep-sign", dest="sep_sign", type=int, choices=(1, -1),
                        default=None, help="sign of the separation terms in the total")
    common.add_argument("--paper-settings", action="store_true",
                        help="batch 60, 30 accumulation steps, lr 1e-4")

    parser = argparse.ArgumentParser(prog="protosarc",
                                     description="prototype-based sarcasm classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common])
    p.add_argument("--train", default=None, help="training embedding file")
    p.add_argument("--val", default=None, help="validation embedding file")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--accum-steps", dest="accum_steps", type=int, default=None)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)

    p = sub.add_parser("crossval", parents=[common])
    p.add_argument("--train", default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)

    p = sub.add_parser("project", parents=[common])
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--train", default=None)
    p.add_argument("--sample-frac", dest="sample_frac", type=float, default=None)

    p = sub.add_parser("explain", parents=[common])
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--test", default=None, help="embedding file holding the record")
    p.add_argument("--record-id", dest="record_id", default=None)
    p.add_argument("--records-file", dest="records_file", default=None,
                   help="file with one record id per line")
    p.add_argument("--top-k", dest="top_k", type=int, default=None)

    p = sub.add_parser("evaluate", parents=[common])
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--test", default=None)

    p = sub.add_parser("gradcheck", parents=[common])
    p.add_argument("--step", dest="gradcheck_step", type=float, default=None)
    p.add_argument("--threshold", dest="gradcheck_threshold", type=float, default=None)

    return parser


COMMANDS = {
    "train": cmd_train,
    "crossval": cmd_crossval,
    "project": cmd_project,
    "explain": cmd_explain,
    "evaluate": cmd_evaluate,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        np.seterr(over="raise", invalid="raise")
        return COMMANDS[args.command](cfg)
    except ProtosarcError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except FloatingPointError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

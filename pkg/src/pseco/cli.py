"""Command-line surface.

Subcommands: gen-data, train, eval, analyze-pseudo, analyze-pcv, ablate.
Exit codes: 0 success, 2 config error, 3 data error. Given identical flags
and seeds every command reproduces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, TrainConfig, load_config
from .diagnostics import (
    collect_precision_curve,
    collect_sigma_pairs,
    compare_assignment_fp,
)
from .io import (
    DataError,
    load_dataset,
    load_params,
    save_dataset,
    save_params,
    write_metrics,
)
from .simulator import (
    NOISE_PRESETS,
    evaluate_map,
    gen_dataset,
    train_pseco,
    train_supervised,
)

EXIT_CONFIG = 2
EXIT_DATA = 3


def _preset(name: str):
    if name not in NOISE_PRESETS:
        raise ConfigError(f"unknown noise preset {name!r}")
    return NOISE_PRESETS[name]


def _cmd_gen_data(args) -> int:
    _preset(args.noise_preset)
    dataset = gen_dataset(args.seed, args.scenes, args.categories, args.labeled_frac)
    save_dataset(dataset, args.out)
    print(f"wrote {args.scenes} scenes ({len(dataset.labeled)} labeled) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    dataset = load_dataset(args.data)
    train = train_supervised if args.mode == "supervised" else train_pseco
    result = train(cfg, dataset)
    write_metrics(result.metrics, args.metrics)
    if args.params_out:
        save_params(result.teacher, args.params_out)
    print(f"final mAP {result.final_map:.4f}; metrics in {args.metrics}")
    return 0


def _cmd_eval(args) -> int:
    params = load_params(args.params)
    dataset = load_dataset(args.data)
    noise = _preset(args.noise_preset)
    result = evaluate_map(params, dataset, noise, seed=args.seed)
    Path(args.out).write_text(json.dumps({"mAP": result}, indent=1))
    print(f"mAP {result:.4f} -> {args.out}")
    return 0


def _cmd_analyze_pseudo(args) -> int:
    params = load_params(args.params)
    dataset = load_dataset(args.data)
    noise = _preset(args.noise_preset)
    thresholds = [round(0.1 * k, 2) for k in range(1, 10)]
    points = collect_precision_curve(
        params, dataset, noise, thresholds, seed=args.seed
    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iou_threshold", "precision"])
        writer.writerows(points)
    print(f"precision curve ({len(points)} points) -> {args.out}")
    return 0


def _cmd_analyze_pcv(args) -> int:
    params = load_params(args.params)
    dataset = load_dataset(args.data)
    noise = _preset(args.noise_preset)
    pairs = collect_sigma_pairs(params, dataset, noise, seed=args.seed)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "true_iou"])
        writer.writerows(pairs)
    print(f"{len(pairs)} (sigma, true IoU) pairs -> {args.out}")
    return 0


ABLATION_AXES = {
    "alpha": [("alpha=0.0", {"alpha": 0.0}),
              ("alpha=0.5", {"alpha": 0.5}),
              ("alpha=1.0", {"alpha": 1.0})],
    "t_bag": [("t_bag=0.3", {"t_bag": 0.3}),
              ("t_bag=0.4", {"t_bag": 0.4}),
              ("t_bag=0.5", {"t_bag": 0.5})],
    "unsup_reg": [("unsup_reg=off", {"unsup_reg": "off"}),
                  ("unsup_reg=pcv", {"unsup_reg": "pcv"})],
    "msl": [("v1_only", {"use_v2": False}),
            ("v1_and_v2", {"use_v2": True})],
}


def _cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(args.data)
    rows = []
    for label, overrides in ABLATION_AXES[args.axis]:
        run_cfg = dataclasses.replace(cfg, **overrides)
        result = train_pseco(run_cfg, dataset)
        rows.append((label, result.final_map))
        print(f"{label}: mAP {result.final_map:.4f}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "map"])
        writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseco",
        description="Semi-supervised detection sandbox: data generation, "
        "training, evaluation, and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenes", type=int, default=200)
    p.add_argument("--categories", type=int, default=3)
    p.add_argument("--labeled-frac", type=float, default=0.1)
    p.add_argument("--noise-preset", default="coco-like")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train the detector")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["supervised", "pseco"], default="pseco")
    p.add_argument("--metrics", required=True)
    p.add_argument("--params-out")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate saved parameters")
    p.add_argument("--params", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-preset", default="coco-like")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("analyze-pseudo",
                       help="pseudo-box precision vs IoU threshold")
    p.add_argument("--data", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-preset", default="coco-like")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_analyze_pseudo)

    p = sub.add_parser("analyze-pcv",
                       help="consistency sigma vs true IoU scatter data")
    p.add_argument("--data", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-preset", default="coco-like")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_analyze_pcv)

    p = sub.add_parser("ablate", help="sweep one hyperparameter axis")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--axis", choices=sorted(ABLATION_AXES), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

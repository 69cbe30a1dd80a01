"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure (including a failed gradient check).
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import pipeline
from .augment import AugmentConfig, apply_transform, sample_transform
from .config import RunConfig
from .errors import ConfigError, SkelRNNError
from .fusion import write_sweep_csv
from .neural.gradcheck import TOLERANCE, gradcheck_problem, gradient_check
from .serialize import joint_order
from .skeleton import load_dataset, save_dataset
from .synthetic import SyntheticSpec, generate

log = logging.getLogger("skelrnn")

GRADCHECK_DEFAULTS = [("stacked", "R4-4"), ("hierarchical", "P2,B4"), ("spatial", "R4-4")]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _deterministic(enabled: bool):
    if not enabled:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=1)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    # --out is taken relative to the working directory, config paths relative to the file
    out = str(Path(args.out).resolve()) if args.out else None
    return cfg.with_overrides(seed=args.seed, out=out)


def cmd_train(args) -> int:
    cfg = _load_config(args)
    with _deterministic(args.deterministic):
        ckpt = pipeline.run_train(cfg)
    print(f"checkpoint: {ckpt}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    ckpt = Path(args.checkpoint) if args.checkpoint else cfg.resolve(cfg.out) / "checkpoint.npz"
    with _deterministic(args.deterministic):
        acc = pipeline.run_eval(cfg, ckpt)
    for name, value in acc.items():
        print(f"{name:9s} accuracy {value:.4f}")
    return 0


def cmd_sweep_lambda(args) -> int:
    cfg = _load_config(args)
    ckpt = Path(args.checkpoint) if args.checkpoint else cfg.resolve(cfg.out) / "checkpoint.npz"
    grid = [float(v) for v in args.grid.split(",")] if args.grid else pipeline.LAMBDA_GRID
    with _deterministic(args.deterministic):
        post = pipeline.compute_posteriors(cfg, ckpt)
    _, test = pipeline.load_splits(cfg)
    rows = pipeline.sweep_lambda_records(post, grid, test.class_count)
    out = cfg.resolve(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / "lambda_sweep.csv")
    for lam, acc in rows:
        print(f"lambda={lam:g} accuracy={acc:.4f}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.variant:
        structure = args.structure or dict(GRADCHECK_DEFAULTS)[args.variant]
        cases = [(args.variant, structure)]
    else:
        cases = GRADCHECK_DEFAULTS
    worst = 0.0
    for variant, structure in cases:
        spec, params, X, lengths, labels = gradcheck_problem(
            variant, structure, T=args.T, class_count=args.classes, seed=args.seed or 0)
        corrupt = None
        if args.corrupt:
            corrupt = args.corrupt if args.corrupt in params else next(iter(params))
        errors = gradient_check(spec, params, X, lengths, labels, eps=args.eps, corrupt=corrupt)
        print(f"# {variant} {spec.structure} (T={X.shape[1]}, classes={spec.class_count})")
        for name, err in errors.items():
            flag = "ok" if err < TOLERANCE else "FAIL"
            print(f"{name:32s} {err:.3e} {flag}")
        worst = max(worst, max(errors.values()))
    print(f"max relative error {worst:.3e} (tolerance {TOLERANCE:g})")
    return 0 if worst < TOLERANCE else 3


def cmd_generate_synthetic(args) -> int:
    fields = yaml.safe_load(Path(args.manifest).read_text()) if args.manifest else {}
    for key in ("class_count", "joint_count", "samples_per_class", "noise", "seed"):
        value = getattr(args, key)
        if value is not None:
            fields[key] = value
    if args.views:
        fields["views"] = [float(v) for v in args.views.split(",")]
    try:
        spec = SyntheticSpec(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad synthetic manifest: {exc}") from exc
    ds = generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    print(f"wrote {len(ds)} sequences to {out}")
    return 0


def cmd_serialize(args) -> int:
    ds = load_dataset(args.dataset, args.format)
    kinds = ["chain", "traversal"] if args.kind == "both" else [args.kind]
    for kind in kinds:
        names = ",".join(ds.graph.joint_names[j] for j in joint_order(ds.graph, kind).order)
        print(f"{kind}: {names}" if len(kinds) > 1 else names)
    return 0


def cmd_augment_preview(args) -> int:
    ds = load_dataset(args.dataset, args.format)
    if not ds.sequences:
        raise SkelRNNError("dataset has no sequences")
    if args.config:
        aug = RunConfig.load(args.config).augment
    else:
        aug = AugmentConfig()
    if args.disable_all:
        aug = AugmentConfig.disabled()
    seed = args.seed if args.seed is not None else 0
    t = sample_transform(aug, np.random.default_rng(seed))
    seq = ds.sequences[args.index]
    after = apply_transform(seq, t)
    print(json.dumps({
        "matrix": t.matrix.tolist(),
        "before": seq.frames[0].tolist(),
        "after": after.frames[0].tolist(),
    }, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skelrnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--deterministic", action="store_true")
        p.add_argument("--out")

    p = sub.add_parser("train", help="train both streams")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint and write CSV reports")
    common(p)
    p.add_argument("--checkpoint")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-lambda", help="fused accuracy over a grid of temporal weights")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--grid", help="comma-separated lambdas (default 0,0.1,...,1)")
    p.set_defaults(func=cmd_sweep_lambda)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    common(p, config=False)
    p.add_argument("--variant", choices=["stacked", "hierarchical", "spatial"])
    p.add_argument("--structure", help="e.g. R4-4 or P2,B4")
    p.add_argument("--T", type=int, default=5)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--corrupt", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("generate-synthetic", help="write a synthetic JSON-lines dataset")
    p.add_argument("--manifest", help="YAML file with SyntheticSpec fields")
    p.add_argument("--class-count", dest="class_count", type=int)
    p.add_argument("--joint-count", dest="joint_count", type=int)
    p.add_argument("--samples-per-class", dest="samples_per_class", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--views", help="comma-separated view angles in degrees")
    p.add_argument("--seed", type=int)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_synthetic)

    p = sub.add_parser("serialize", help="print a joint order by name")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", default="jsonl")
    p.add_argument("--kind", choices=["chain", "traversal", "both"], default="both")
    p.set_defaults(func=cmd_serialize)

    p = sub.add_parser("augment-preview", help="apply one seeded transform to a sequence")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", default="jsonl")
    p.add_argument("--config", help="take augmentation ranges from a run config")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--disable-all", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_augment_preview)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SkelRNNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Training and evaluation of the two-stream model on a dataset.

The temporal and spatial streams are trained independently, each with its
own softmax head; their posteriors only meet at evaluation time, where they
are fused with weight ``lambda``. Since no gradient crosses the fusion
point, this matches end-to-end training of the weighted score average.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .augment import AugmentConfig, apply_transform, sample_transform
from .config import RunConfig
from .errors import ConfigError, LoadError, TrainingError
from .fusion import evaluate, group_average, fuse, predict, sweep_lambda, write_sweep_csv
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.network import NetworkSpec, build_spec, init_params, loss_and_grads, predict_proba
from .neural.optim import TrainConfig, learning_rate, sgd_step
from .serialize import JointOrder, build_spatial_batch, joint_order, spatial_centers
from .skeleton import (Dataset, SkeletonSequence, load_dataset, normalize_persons,
                       resample_to_length, split_folds, split_two_person, stack_frames)

log = logging.getLogger(__name__)

LAMBDA_GRID = [round(0.1 * k, 10) for k in range(11)]


@dataclass
class Units:
    """Preprocessed sequences fed to the networks.

    In ``average`` two-person mode a 6D record becomes two single-person
    units sharing one ``owner`` (the record index); otherwise units and
    records correspond one to one.
    """

    seqs: list[SkeletonSequence]
    owner: np.ndarray
    labels: np.ndarray  # per record

    @property
    def unit_labels(self) -> np.ndarray:
        return np.array([s.label for s in self.seqs], dtype=np.int64)


def prepare(ds: Dataset, T: int, two_person: str = "concat") -> Units:
    """Center every person, then resample to ``T`` frames."""
    wide = any(s.coord_dim == 6 for s in ds.sequences)
    seqs, owner = [], []
    for k, seq in enumerate(ds.sequences):
        seq = normalize_persons(seq, ds.graph)
        if two_person == "average" and seq.coord_dim == 6:
            parts = list(split_two_person(seq))
        elif two_person == "concat" and wide and seq.coord_dim == 3:
            pad = np.zeros_like(seq.frames)
            parts = [seq.with_frames(np.concatenate([seq.frames, pad], axis=2))]
        else:
            parts = [seq]
        for p in parts:
            seqs.append(resample_to_length(p, T))
            owner.append(k)
    labels = np.array([s.label for s in ds.sequences], dtype=np.int64)
    return Units(seqs, np.array(owner, dtype=np.int64), labels)


def effective_length(seq: SkeletonSequence, window: int) -> int:
    """Span used for spatial window centers: the valid frames, at least one window."""
    return max(seq.valid_length, window)


# ---------------------------------------------------------------- stream inputs

@dataclass
class Streams:
    temporal: NetworkSpec
    spatial: NetworkSpec
    order: JointOrder
    window: int


def build_streams(cfg: RunConfig, ds: Dataset, units: Units) -> Streams:
    D = units.seqs[0].coord_dim if units.seqs else 3
    J = ds.graph.joint_count
    order = joint_order(ds.graph, cfg.spatial_order)
    temporal = build_spec(cfg.temporal, J * D, ds.class_count, graph=ds.graph, coord_dim=D)
    spatial = build_spec(cfg.spatial, cfg.window * D, ds.class_count, spatial=True)
    return Streams(temporal, spatial, order, cfg.window)


def temporal_posteriors(spec: NetworkSpec, params: dict, seqs: Sequence[SkeletonSequence]):
    X, lengths = stack_frames(seqs)
    return predict_proba(spec, params, X, lengths)


def spatial_posteriors(spec: NetworkSpec, params: dict, seqs: Sequence[SkeletonSequence],
                       order: JointOrder, window: int) -> np.ndarray:
    """Average the posteriors of non-overlapping windows tiling each sequence."""
    flat_seqs, flat_centers, owner = [], [], []
    for k, s in enumerate(seqs):
        for c in spatial_centers(effective_length(s, window), window, "eval-grid"):
            flat_seqs.append(s)
            flat_centers.append(c)
            owner.append(k)
    X = build_spatial_batch(flat_seqs, order, window, flat_centers)
    probs = predict_proba(spec, params, X)
    return group_average(probs, np.array(owner), len(seqs))


# ---------------------------------------------------------------- training

def _rngs(seed: int, stream: str) -> dict[str, np.random.Generator]:
    tag = {"temporal": 1, "spatial": 2}[stream]
    children = np.random.SeedSequence([seed, tag]).spawn(4)
    return {name: np.random.default_rng(s)
            for name, s in zip(("init", "shuffle", "augment", "centers"), children)}


def train_stream(stream: str, spec: NetworkSpec, seqs: Sequence[SkeletonSequence],
                 train_cfg: TrainConfig, aug_cfg: AugmentConfig | None, *,
                 order: JointOrder | None = None, window: int = 1,
                 seed: int = 0) -> tuple[dict, list[dict]]:
    """Train one stream with minibatch SGD; returns parameters and per-epoch log rows.

    Each epoch shuffles the examples, draws one augmentation transform per
    example (if ``aug_cfg`` is given) and, for the spatial stream, one
    random window center per example.
    """
    if not seqs:
        raise LoadError("training set is empty")
    rng = _rngs(seed, stream)
    params = init_params(spec, rng["init"])
    labels = np.array([s.label for s in seqs], dtype=np.int64)
    rows = []
    for epoch in range(train_cfg.epochs):
        lr = learning_rate(epoch, train_cfg)
        perm = rng["shuffle"].permutation(len(seqs))
        total, correct = 0.0, 0
        for start in range(0, len(seqs), train_cfg.batch_size):
            idx = perm[start:start + train_cfg.batch_size]
            batch = [seqs[i] for i in idx]
            if aug_cfg is not None and aug_cfg.enabled:
                batch = [apply_transform(s, sample_transform(aug_cfg, rng["augment"]))
                         for s in batch]
            if stream == "temporal":
                X, lengths = stack_frames(batch)
            else:
                centers = [spatial_centers(effective_length(s, window), window, "train-random",
                                           rng["centers"])[0] for s in batch]
                X = build_spatial_batch(batch, order, window, centers)
                lengths = np.full(len(batch), X.shape[1])
            loss, grads, probs = loss_and_grads(spec, params, X, lengths, labels[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"{stream} stream: non-finite loss at epoch {epoch}")
            params = sgd_step(params, grads, epoch, train_cfg)
            total += loss * len(idx)
            correct += int(np.sum(np.argmax(probs, axis=1) == labels[idx]))
        rows.append({"stream": stream, "epoch": epoch, "lr": lr,
                     "loss": total / len(seqs), "accuracy": correct / len(seqs)})
        log.info("%s epoch %d lr %s loss %.4f acc %.3f", stream, epoch, lr,
                 rows[-1]["loss"], rows[-1]["accuracy"])
    return params, rows


def load_splits(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    path = cfg.resolve(cfg.dataset_path)
    if not path.exists():
        raise LoadError(f"dataset not found: {path}")
    ds = load_dataset(path, cfg.dataset_format)
    if cfg.test_path is not None:
        tpath = cfg.resolve(cfg.test_path)
        if not tpath.exists():
            raise LoadError(f"test dataset not found: {tpath}")
        test = load_dataset(tpath, cfg.dataset_format)
        if test.graph != ds.graph or test.class_count != ds.class_count:
            raise LoadError("test dataset graph or class count differs from training set")
        return ds, test
    if len(ds) == 0:
        raise LoadError("dataset is empty")
    train_idx, test_idx = split_folds(ds, cfg.split_k, cfg.split_mode, cfg.seed)[cfg.fold]
    return ds.subset(train_idx), ds.subset(test_idx)


def write_log(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stream", "epoch", "lr", "loss", "accuracy"])
        for r in rows:
            w.writerow([r["stream"], r["epoch"], repr(r["lr"]), repr(r["loss"]),
                        repr(r["accuracy"])])


def run_train(cfg: RunConfig) -> Path:
    """Train both streams; writes ``train_log.csv`` and ``checkpoint.npz`` under ``cfg.out``."""
    train_ds, _ = load_splits(cfg)
    if len(train_ds) == 0:
        raise LoadError("training split is empty")
    units = prepare(train_ds, cfg.T, cfg.two_person)
    streams = build_streams(cfg, train_ds, units)
    aug = cfg.augment if cfg.augment_enabled else None

    t_params, t_rows = train_stream("temporal", streams.temporal, units.seqs, cfg.train, aug,
                                    seed=cfg.seed)
    s_params, s_rows = train_stream("spatial", streams.spatial, units.seqs, cfg.train, aug,
                                    order=streams.order, window=streams.window, seed=cfg.seed)
    out = cfg.resolve(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_log(t_rows + s_rows, out / "train_log.csv")
    ckpt = out / "checkpoint.npz"
    save_checkpoint(ckpt, {"temporal": (streams.temporal, t_params),
                           "spatial": (streams.spatial, s_params)},
                    seed=cfg.seed, epoch=cfg.train.epochs,
                    extra={"order": list(streams.order.order), "order_kind": streams.order.kind,
                           "window": streams.window, "T": cfg.T})
    cfg.save(out / "config.yaml")
    return ckpt


# ---------------------------------------------------------------- evaluation

@dataclass
class Posteriors:
    temporal: np.ndarray  # per unit
    spatial: np.ndarray   # per unit
    owner: np.ndarray
    labels: np.ndarray    # per record

    def fused(self, lam: float) -> np.ndarray:
        """Fuse per unit (person), then average units of the same record."""
        return group_average(fuse(self.temporal, self.spatial, lam), self.owner, len(self.labels))


def _check_spec(name: str, expected: NetworkSpec, found: NetworkSpec) -> None:
    a, b = expected.to_dict(), found.to_dict()
    for key in a:
        if a[key] != b[key]:
            raise ConfigError(
                f"{name} stream: checkpoint {key}={b[key]!r} but config gives {a[key]!r}")


def compute_posteriors(cfg: RunConfig, checkpoint: Path, ds: Dataset | None = None) -> Posteriors:
    if ds is None:
        _, ds = load_splits(cfg)
    units = prepare(ds, cfg.T, cfg.two_person)
    streams = build_streams(cfg, ds, units)
    ckpt_streams, _ = load_checkpoint(checkpoint)
    for name in ("temporal", "spatial"):
        if name not in ckpt_streams:
            raise ConfigError(f"checkpoint lacks the {name} stream")
        _check_spec(name, getattr(streams, name), ckpt_streams[name][0])
    t_spec, t_params = ckpt_streams["temporal"]
    s_spec, s_params = ckpt_streams["spatial"]
    pt = temporal_posteriors(t_spec, t_params, units.seqs)
    ps = spatial_posteriors(s_spec, s_params, units.seqs, streams.order, streams.window)
    return Posteriors(pt, ps, units.owner, units.labels)


def run_eval(cfg: RunConfig, checkpoint: Path, out: Path | None = None) -> dict[str, float]:
    """Evaluate a checkpoint on the test split and write the CSV reports."""
    _, test = load_splits(cfg)
    if len(test) == 0:
        raise LoadError("evaluation split is empty")
    post = compute_posteriors(cfg, checkpoint, test)
    out = cfg.resolve(cfg.out) if out is None else out
    out.mkdir(parents=True, exist_ok=True)

    C = test.class_count
    scores = {
        "temporal": evaluate(predict(post.fused(1.0)), post.labels, C),
        "spatial": evaluate(predict(post.fused(0.0)), post.labels, C),
        "fused": evaluate(predict(post.fused(cfg.fusion.lam)), post.labels, C),
    }
    scores["fused"].write_csv(out, test.class_names)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stream", "accuracy", "macro_precision", "macro_recall", "macro_f1"])
        for name, rep in scores.items():
            w.writerow([name, repr(rep.accuracy), repr(rep.macro_precision),
                        repr(rep.macro_recall), repr(rep.macro_f1)])
    write_sweep_csv(sweep_lambda_records(post, LAMBDA_GRID, C), out / "lambda_sweep.csv")
    return {name: rep.accuracy for name, rep in scores.items()}


def sweep_lambda_records(post: Posteriors, grid: Sequence[float], class_count: int):
    if np.array_equal(post.owner, np.arange(len(post.labels))):
        return sweep_lambda(post.temporal, post.spatial, post.labels, grid, class_count)
    return [(float(lam), evaluate(predict(post.fused(lam)), post.labels, class_count).accuracy)
            for lam in grid]

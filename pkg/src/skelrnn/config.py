"""Run configuration: one YAML file with a section per pipeline stage."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .augment import AugmentConfig
from .errors import ConfigError, InvalidInputError
from .fusion import FusionConfig
from .neural.optim import TrainConfig

# documented per-dataset sequence lengths
DEFAULT_T = {"ntu": 100, "sbu": 35, "chalearn": 50}


@dataclass
class RunConfig:
    dataset_path: str
    dataset_format: str = "jsonl"
    test_path: str | None = None
    T: int = 100
    two_person: str = "concat"          # concat | average
    split_mode: str = "by-sequence"
    split_k: int = 5
    fold: int = 0
    temporal: str = "R512-512"
    spatial: str = "R512-512"
    spatial_order: str = "chain"
    augment_enabled: bool = True
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    out: str = "runs/default"
    seed: int = 0
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.two_person not in ("concat", "average"):
            raise ConfigError("two_person must be 'concat' or 'average'")
        if self.spatial_order not in ("chain", "traversal"):
            raise ConfigError("spatial.order must be 'chain' or 'traversal'")
        if self.split_mode not in ("by-sequence", "by-subject", "by-view"):
            raise ConfigError(f"unknown split mode {self.split_mode!r}")
        if not 0 <= self.fold < self.split_k:
            raise ConfigError(f"fold {self.fold} outside [0, {self.split_k})")
        try:
            self.window
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def window(self) -> int:
        return self.fusion.window(self.T)

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    # ------------------------------------------------------------ (de)serialization

    def to_dict(self) -> dict:
        aug = self.augment.to_dict()
        aug.pop("seed")
        for k in ("rotate", "scale", "shear"):
            aug[k] = bool(aug[k])
        return {
            "seed": self.seed,
            "out": self.out,
            "dataset": {"path": self.dataset_path, "format": self.dataset_format,
                        "test_path": self.test_path},
            "preprocess": {"T": self.T, "two_person": self.two_person},
            "split": {"mode": self.split_mode, "k": self.split_k, "fold": self.fold},
            "temporal": {"structure": self.temporal},
            "spatial": {"structure": self.spatial, "order": self.spatial_order},
            "augment": {"enabled": self.augment_enabled, **aug},
            "train": {k: v for k, v in self.train.to_dict().items() if k != "seed"},
            "fusion": {"lambda": self.fusion.lam, "tau": self.fusion.tau},
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".") -> "RunConfig":
        d = dict(d or {})
        known = {"seed", "out", "dataset", "preprocess", "split", "temporal", "spatial",
                 "augment", "train", "fusion"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            seed = int(d.get("seed", 0))
            ds = d.get("dataset") or {}
            pre = d.get("preprocess") or {}
            split = d.get("split") or {}
            aug = dict(d.get("augment") or {})
            enabled = bool(aug.pop("enabled", True))
            for k in ("rot_range_x", "rot_range_y", "rot_range_z", "scale_range", "shear_range"):
                if k in aug:
                    aug[k] = tuple(_number(v) for v in aug[k])
            fusion = d.get("fusion") or {}
            return cls(
                dataset_path=ds["path"],
                dataset_format=ds.get("format", "jsonl"),
                test_path=ds.get("test_path"),
                T=int(pre.get("T", 100)),
                two_person=pre.get("two_person", "concat"),
                split_mode=split.get("mode", "by-sequence"),
                split_k=int(split.get("k", 5)),
                fold=int(split.get("fold", 0)),
                temporal=str((d.get("temporal") or {}).get("structure", "R512-512")),
                spatial=str((d.get("spatial") or {}).get("structure", "R512-512")),
                spatial_order=(d.get("spatial") or {}).get("order", "chain"),
                augment_enabled=enabled,
                augment=AugmentConfig(**aug, seed=seed),
                train=TrainConfig(**(d.get("train") or {}), seed=seed),
                fusion=FusionConfig(float(fusion.get("lambda", 0.9)), fusion.get("tau")),
                out=str(d.get("out", "runs/default")),
                seed=seed,
                base_dir=Path(base_dir),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from exc
        except (TypeError, InvalidInputError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    def with_overrides(self, *, seed: int | None = None, out: str | None = None) -> "RunConfig":
        d = self.to_dict()
        if seed is not None:
            d["seed"] = seed
        if out is not None:
            d["out"] = out
        return RunConfig.from_dict(d, self.base_dir)


def _number(v) -> float:
    """Accept plain numbers or strings such as ``"pi/6"`` / ``"-pi/6"``."""
    if isinstance(v, (int, float)):
        return float(v)
    text = str(v).strip().replace(" ", "")
    sign = -1.0 if text.startswith("-") else 1.0
    text = text.lstrip("+-")
    if text.startswith("pi"):
        rest = text[2:]
        val = math.pi / float(rest[1:]) if rest.startswith("/") else math.pi * (float(rest[1:]) if rest else 1.0)
        return sign * val
    return sign * float(text)

"""Single-file checkpoints: JSON metadata plus named float arrays in one ``.npz``."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import LoadError
from .network import NetworkSpec, param_shapes

FORMAT = "skelrnn-checkpoint/1"


def save_checkpoint(path: str | Path, streams: dict[str, tuple[NetworkSpec, dict]],
                    *, seed: int, epoch: int, extra: dict | None = None) -> None:
    """Write every stream's spec and parameters to ``path``.

    Arrays are stored under ``<stream>/<param name>``; the metadata record
    carries the specs, seed, epoch counter and array shapes.
    """
    meta = {
        "format": FORMAT,
        "seed": seed,
        "epoch": epoch,
        "streams": {name: spec.to_dict() for name, (spec, _) in streams.items()},
        "shapes": {f"{s}/{k}": list(v.shape) for s, (_, p) in streams.items() for k, v in p.items()},
        "extra": extra or {},
    }
    arrays = {f"{s}/{k}": np.ascontiguousarray(v, dtype=np.float64)
              for s, (_, p) in streams.items() for k, v in p.items()}
    blob = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=blob, **arrays)


def load_checkpoint(path: str | Path) -> tuple[dict[str, tuple[NetworkSpec, dict]], dict]:
    """Inverse of :func:`save_checkpoint`; returns ``(streams, metadata)``."""
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(z["__meta__"].tobytes().decode())
            arrays = {k: z[k] for k in z.files if k != "__meta__"}
    except (OSError, ValueError, KeyError) as exc:
        raise LoadError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("format") != FORMAT:
        raise LoadError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
    streams = {}
    for name, spec_dict in meta["streams"].items():
        spec = NetworkSpec.from_dict(spec_dict)
        params = {}
        for key, shape in param_shapes(spec).items():
            arr = arrays.get(f"{name}/{key}")
            if arr is None or arr.shape != tuple(shape):
                raise LoadError(f"{path}: parameter {name}/{key} missing or misshapen")
            params[key] = arr
        streams[name] = (spec, params)
    return streams, meta

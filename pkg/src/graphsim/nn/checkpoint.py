"""Parameter files: JSON map of name -> shape, dtype and row-major values."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError

FORMAT = "graphsim.params"
VERSION = 1


def save_params(path, params: dict[str, np.ndarray]) -> None:
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "params": {
            name: {
                "shape": list(arr.shape),
                "dtype": str(arr.dtype),
                "values": [float(x) for x in np.asarray(arr).reshape(-1)],
            }
            for name, arr in params.items()
        },
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_params(path) -> dict[str, np.ndarray]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a parameter file ({exc.msg})") from None
    if payload.get("format") != FORMAT:
        raise DataError(f"{path}: unexpected format {payload.get('format')!r}")
    if payload.get("version") != VERSION:
        raise DataError(f"{path}: unsupported version {payload.get('version')!r}")
    out = {}
    for name, entry in payload["params"].items():
        arr = np.array(entry["values"], dtype=entry.get("dtype", "float64"))
        shape = tuple(entry["shape"])
        if arr.size != int(np.prod(shape)):
            raise DataError(f"{path}: {name} has {arr.size} values for shape {shape}")
        out[name] = arr.reshape(shape)
    return out

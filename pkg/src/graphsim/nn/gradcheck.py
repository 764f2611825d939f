"""Central finite-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward


def relative_error(analytic: float, numeric: float, floor: float = 1e-7) -> float:
    """``|a - n| / max(|a|, |n|)``; zero when both magnitudes are below ``floor``."""
    scale = max(abs(analytic), abs(numeric))
    if scale < floor:
        return 0.0
    return abs(analytic - numeric) / scale


def grad_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-6,
    max_coords: Optional[int] = None,
    seed: int = 0,
    floor: float = 1e-7,
) -> float:
    """Worst relative error between tape gradients and central differences.

    ``fn`` recomputes a scalar loss from the current parameter values. With
    ``max_coords`` set, at most that many randomly chosen coordinates are
    probed per parameter; otherwise every coordinate is.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    with Tape() as tape:
        loss = fn()
    analytic = backward(tape, loss, params)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        g = analytic[p].reshape(-1)
        for i in coords:
            saved = flat[i]
            flat[i] = saved + eps
            up = fn().item()
            flat[i] = saved - eps
            down = fn().item()
            flat[i] = saved
            numeric = (up - down) / (2 * eps)
            worst = max(worst, relative_error(float(g[i]), numeric, floor))
    return worst

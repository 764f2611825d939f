"""Regression and ranking metrics."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateInput, Empty, KTooLarge, LengthMismatch


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.size} predictions for {truth.size} targets")
    return pred, truth


def mse_metric(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    if pred.size == 0:
        raise Empty("mse of empty lists")
    return float(np.mean((pred - truth) ** 2))


def kendall_tau(pred_scores, true_scores) -> float:
    """Tie-corrected Kendall tau-b over all pairs.

    Raises DegenerateInput when either list is entirely tied.
    """
    x, y = _pair(pred_scores, true_scores)
    if x.size < 2:
        raise DegenerateInput("need at least two items")
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(x.size, k=1)
    dx, dy = dx[upper], dy[upper]
    nx = np.count_nonzero(dx)
    ny = np.count_nonzero(dy)
    if nx == 0 or ny == 0:
        raise DegenerateInput("all values tied")
    s = float(np.sum(dx * dy))
    return float(np.clip(s / np.sqrt(float(nx) * float(ny)), -1.0, 1.0))


def rank_order(scores, ids: Sequence[str]) -> list[int]:
    """Indices sorted by descending score, ties broken by ascending id."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(ids) != scores.size:
        raise LengthMismatch("one id per score is required")
    return sorted(range(scores.size), key=lambda i: (-scores[i], ids[i]))


def precision_at_k(pred_scores, true_scores, k: int, ids: Sequence[str] | None = None) -> float:
    """Overlap of the predicted and true top-k, divided by k.

    Both top-k sets use the same deterministic tie-break: higher score first,
    then smaller id (list position when ``ids`` is omitted).
    """
    pred, truth = _pair(pred_scores, true_scores)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > pred.size:
        raise KTooLarge(f"k={k} exceeds list length {pred.size}")
    if ids is None:
        width = len(str(pred.size))
        ids = [str(i).zfill(width) for i in range(pred.size)]
    top_pred = set(rank_order(pred, ids)[:k])
    top_true = set(rank_order(truth, ids)[:k])
    return len(top_pred & top_true) / k

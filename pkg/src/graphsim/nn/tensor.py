"""Dense tensors and a reverse-mode tape.

Operations record themselves on the innermost active :class:`Tape` whenever
one of their inputs requires a gradient. Outside a tape they only compute
values, which is what inference uses.
"""
from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from ..errors import DetachedTensor, NotScalar

_TAPES: list["Tape"] = []
_DEBUG = False


def set_debug(enabled: bool) -> None:
    """Check every op output for NaN/Inf (slow)."""
    global _DEBUG
    _DEBUG = bool(enabled)


class Tensor:
    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind not in "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return self.data.item()

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # operator sugar; the functions live in ops
    def __add__(self, other):
        from .ops import add

        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from .ops import sub

        return sub(self, other)

    def __rsub__(self, other):
        from .ops import sub

        return sub(other, self)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from .ops import mul

        return mul(self, -1.0)

    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


Vjp = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Ordered record of primitive ops: ``(output, inputs, vjp)``.

    ``vjp`` maps the output cotangent to one cotangent per input (``None``
    where no gradient is needed).
    """

    def __init__(self):
        self.records: list[tuple[Tensor, tuple[Tensor, ...], Vjp]] = []
        self._outputs: set[int] = set()

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.remove(self)
        return False

    def __len__(self):
        return len(self.records)

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], vjp: Vjp) -> None:
        self.records.append((out, inputs, vjp))
        self._outputs.add(id(out))

    def produced(self, t: Tensor) -> bool:
        return id(t) in self._outputs


def active_tape() -> Optional[Tape]:
    return _TAPES[-1] if _TAPES else None


def make_output(data: np.ndarray, inputs: Iterable[Tensor], vjp: Vjp) -> Tensor:
    """Wrap an op result and record it if any input needs a gradient."""
    inputs = tuple(inputs)
    if _DEBUG and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite values in op output")
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    if needs:
        tape.record(out, inputs, vjp)
    return out


def backward(tape: Tape, loss: Tensor, params: Optional[Iterable[Tensor]] = None) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar ``loss`` with respect to leaf tensors.

    With ``params`` given, the result has one entry per parameter, zero-filled
    for parameters the loss does not depend on. Otherwise every leaf reached
    that requires a gradient is returned.
    """
    if loss.size != 1:
        raise NotScalar(f"loss must be a scalar, got shape {loss.shape}")
    if not tape.produced(loss):
        raise DetachedTensor("loss was not computed on this tape")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for out, inputs, vjp in reversed(tape.records):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for t, gt in zip(inputs, vjp(g)):
            if gt is None or not t.requires_grad:
                continue
            if not tape.produced(t):
                leaves[id(t)] = t
            if id(t) in grads:
                grads[id(t)] = grads[id(t)] + gt
            else:
                grads[id(t)] = gt

    if params is None:
        return {t: grads[id(t)] for i, t in leaves.items()}
    return {p: grads.get(id(p), np.zeros_like(p.data)) for p in params}

from .checkpoint import load_params, save_params
from .gradcheck import grad_check, relative_error
from .ops import (
    add,
    bilinear_resize,
    concat,
    conv2d,
    interpolation_matrix,
    matmul,
    maxpool2d,
    mean,
    mse_loss,
    mul,
    relu,
    reshape,
    sigmoid,
    sub,
    transpose,
)
from .ops import sum as tensor_sum
from .optim import Adam, AdamState, adam_step
from .tensor import Tape, Tensor, active_tape, as_tensor, backward, set_debug

__all__ = [
    "Adam",
    "AdamState",
    "Tape",
    "Tensor",
    "active_tape",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "bilinear_resize",
    "concat",
    "conv2d",
    "grad_check",
    "interpolation_matrix",
    "load_params",
    "matmul",
    "maxpool2d",
    "mean",
    "mse_loss",
    "mul",
    "relative_error",
    "relu",
    "reshape",
    "save_params",
    "set_debug",
    "sigmoid",
    "sub",
    "tensor_sum",
    "transpose",
]

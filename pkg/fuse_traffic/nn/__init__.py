from .gradcheck import grad_check, grad_check_report
from .rng import RngState, xavier_init
from .tensor import (
    Matrix,
    Parameter,
    Tensor,
    absolute,
    add,
    concat_cols,
    dropout,
    layer_norm_rows,
    matmul,
    mean_axis,
    mul,
    relu,
    scale,
    select_axis,
    shift_axis,
    sigmoid,
    slice_cols,
    softmax_rows,
    sum_all,
    transpose,
)

__all__ = [
    "Matrix",
    "Parameter",
    "RngState",
    "Tensor",
    "absolute",
    "add",
    "concat_cols",
    "dropout",
    "grad_check",
    "grad_check_report",
    "layer_norm_rows",
    "matmul",
    "mean_axis",
    "mul",
    "relu",
    "scale",
    "select_axis",
    "shift_axis",
    "sigmoid",
    "slice_cols",
    "softmax_rows",
    "sum_all",
    "transpose",
    "xavier_init",
]

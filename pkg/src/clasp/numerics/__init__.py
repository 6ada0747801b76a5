from . import autodiff, kernels
from .adam import AdamState, adam_step
from .autodiff import (
    Node,
    add,
    add_rowvec,
    backward,
    constant,
    conv1d,
    embedding_lookup,
    exp,
    finite_diff_check,
    gather_diag,
    l2_normalize_rows,
    log_softmax_rows,
    matmul,
    mean_all,
    mean_over_axis,
    mul_const,
    mul_scalar,
    parameter,
    relu,
    sub,
    sum_over_axis,
    transpose,
)
from .kernels import BACKEND, conv1d_out_len

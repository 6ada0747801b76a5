"""conv1d forward/backward kernels with a compiled core and a numpy fallback.

The compiled extension (`_ckernels`, Cython) implements the im2col gather and
col2im scatter loops; everything else is BLAS. When the extension is missing
or CLASP_KERNELS=py is set, pure-numpy stride tricks are used instead.
`benchmarks/bench_kernels.py` compares the two.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError

try:
    if os.environ.get("CLASP_KERNELS", "").lower() == "py":
        _ck = None
    else:
        from . import _ckernels as _ck
except ImportError:
    _ck = None

BACKEND = "cython" if _ck is not None else "python"


def conv1d_out_len(length, k, stride, pad):
    return (length + 2 * pad - k) // stride + 1


def _im2col_py(xp, k, stride, lout):
    # xp: padded input (B, C, Lp) -> (B, Lout, C*k)
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]  # (B, C, Lout, k)
    b, c = xp.shape[0], xp.shape[1]
    return np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(b, lout, c * k)


def _col2im_py(gcols, k, stride, gxp):
    b, lout, _ = gcols.shape
    c = gxp.shape[1]
    g = gcols.reshape(b, lout, c, k)
    for j in range(k):
        gxp[:, :, j : j + stride * lout : stride] += g[:, :, :, j].transpose(0, 2, 1)


def im2col(x, k, stride, pad):
    """Pad x (B, C, L) and gather convolution columns (B, Lout, C*k)."""
    b, c, length = x.shape
    lout = conv1d_out_len(length, k, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    xp = np.ascontiguousarray(xp)  # ufuncs/pad can preserve a transposed layout
    if _ck is not None:
        cols = np.empty((b, lout, c * k), dtype=x.dtype)
        _ck.im2col(xp, k, stride, cols)
        return cols
    return _im2col_py(xp, k, stride, lout)


def col2im(gcols, k, stride, pad, x_shape):
    """Scatter column gradients back to an input-shaped gradient array."""
    b, c, length = x_shape
    gxp = np.zeros((b, c, length + 2 * pad), dtype=gcols.dtype)
    if _ck is not None:
        _ck.col2im(np.ascontiguousarray(gcols), k, stride, gxp)
    else:
        _col2im_py(gcols, k, stride, gxp)
    return gxp[:, :, pad : pad + length] if pad else gxp


def conv1d_forward(x, w, b, stride, pad):
    """x (B, Cin, L), w (Cout, Cin, k), b (Cout,) -> (B, Cout, Lout)."""
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeError("conv1d", x.shape, w.shape)
    cout, cin, k = w.shape
    cols = im2col(x, k, stride, pad)  # (B, Lout, Cin*k)
    y = cols @ w.reshape(cout, cin * k).T + b
    return y.transpose(0, 2, 1), cols


def conv1d_backward(x, w, stride, pad, gy, cols=None):
    """Gradients of conv1d_forward w.r.t. x, w, b given gy (B, Cout, Lout)."""
    cout, cin, k = w.shape
    if cols is None:
        cols = im2col(x, k, stride, pad)
    gy2 = np.ascontiguousarray(gy.transpose(0, 2, 1))  # (B, Lout, Cout)
    gb = gy2.sum(axis=(0, 1))
    gw = np.tensordot(gy2, cols, axes=([0, 1], [0, 1])).reshape(cout, cin, k)
    gcols = gy2 @ w.reshape(cout, cin * k)
    gx = col2im(gcols, k, stride, pad, x.shape)
    return gx, gw, gb

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled im2col / col2im kernels for 1-D convolution.

These are the only loops hot enough to matter; the surrounding matmuls
stay in BLAS either way.
"""

import numpy as np

cimport cython

ctypedef fused real:
    float
    double


@cython.boundscheck(False)
@cython.wraparound(False)
def im2col(real[:, :, ::1] xp, int k, int stride, real[:, :, ::1] out):
    """Gather padded input xp (B, C, Lp) into columns out (B, Lout, C*k)."""
    cdef Py_ssize_t B = xp.shape[0]
    cdef Py_ssize_t C = xp.shape[1]
    cdef Py_ssize_t Lout = out.shape[1]
    cdef Py_ssize_t b, c, t, j, base
    for b in range(B):
        for t in range(Lout):
            base = t * stride
            for c in range(C):
                for j in range(k):
                    out[b, t, c * k + j] = xp[b, c, base + j]


@cython.boundscheck(False)
@cython.wraparound(False)
def col2im(real[:, :, ::1] gcols, int k, int stride, real[:, :, ::1] gxp):
    """Scatter-add column gradients gcols (B, Lout, C*k) back into gxp (B, C, Lp)."""
    cdef Py_ssize_t B = gcols.shape[0]
    cdef Py_ssize_t Lout = gcols.shape[1]
    cdef Py_ssize_t C = gxp.shape[1]
    cdef Py_ssize_t b, c, t, j, base
    for b in range(B):
        for t in range(Lout):
            base = t * stride
            for c in range(C):
                for j in range(k):
                    gxp[b, c, base + j] += gcols[b, t, c * k + j]

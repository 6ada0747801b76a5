"""Adam optimizer over named parameter dicts."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state):
    """One bias-corrected Adam update. Returns a new {name: array} dict."""
    state.step += 1
    t = state.step
    out = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"adam_step[{name}]", p.shape, g.shape)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p, dtype=np.float64)
            state.v[name] = np.zeros_like(p, dtype=np.float64)
        v = state.v[name]
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * (g * g)
        state.m[name], state.v[name] = m, v
        mhat = m / (1 - state.beta1**t)
        vhat = v / (1 - state.beta2**t)
        out[name] = (p - state.lr * mhat / (np.sqrt(vhat) + state.eps)).astype(p.dtype)
    return out

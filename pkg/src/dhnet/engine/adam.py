"""Adam optimizer over named parameter dictionaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingAbort(RuntimeError):
    """Raised when a non-finite gradient would corrupt the parameters."""


@dataclass
class AdamState:
    """Per-parameter moment accumulators and step counter."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> dict:
    """One bias-corrected Adam update; returns new params, mutates state."""
    state.step += 1
    t = state.step
    out = {}
    for name, p in params.items():
        if name not in grads:
            out[name] = p
            continue
        g = grads[name]
        if not np.isfinite(g).all():
            raise TrainingAbort(f"non-finite gradient for parameter {name!r}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        mhat = m / (1.0 - state.beta1**t)
        vhat = v / (1.0 - state.beta2**t)
        out[name] = p - state.lr * mhat / (np.sqrt(vhat) + state.eps)
    return out

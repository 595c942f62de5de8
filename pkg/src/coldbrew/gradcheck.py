"""Finite-difference verification of the hand-written backward rules.

Run models in 64-bit mode here: central differences at eps=1e-5 are only
trustworthy in double precision.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tape import Tape, Tensor


def grad_check(model_closure: Callable[[Tape | None], Tensor],
               params: list[Tensor], eps: float = 1e-5,
               max_coords_per_param: int = 24,
               rng: np.random.Generator | None = None) -> float:
    """Compare tape gradients against central finite differences.

    `model_closure(tape)` must rebuild the forward pass from the current
    parameter values and return the scalar loss. Large parameters are probed
    on a seeded coordinate subset. Returns the max relative error.
    """
    rng = rng or np.random.default_rng(0)
    for p in params:
        if p.data.dtype != np.float64:
            raise ValueError(f"grad_check requires float64 parameters, got {p.data.dtype}")
        p.zero_grad()

    tape = Tape()
    loss = model_closure(tape)
    if not np.isfinite(loss.data):
        raise FloatingPointError("non-finite loss in grad_check")
    tape.backward(loss)

    worst = 0.0
    for p in params:
        if p.grad is None:
            raise AssertionError(f"parameter {p.name!r} received no gradient")
        flat = p.data.reshape(-1)
        count = flat.size
        if count > max_coords_per_param:
            coords = rng.choice(count, size=max_coords_per_param, replace=False)
        else:
            coords = np.arange(count)
        analytic = p.grad.reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            up = float(model_closure(None).data)
            flat[c] = orig - eps
            down = float(model_closure(None).data)
            flat[c] = orig
            fd = (up - down) / (2 * eps)
            a = analytic[c]
            err = abs(a - fd) / max(abs(a), abs(fd), 1e-4)
            worst = max(worst, err)
    return worst

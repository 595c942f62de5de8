"""Reverse-mode differentiation over an explicitly recorded operation sequence.

Only the handful of primitives in `ops` are differentiable. Each op records
(inputs, output, backward rule) on a Tape during the forward pass; backward
walks the records in exact reverse order and accumulates gradients additively.
A tape and its parameters belong to a single training step; pure forward calls
pass tape=None.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class Tensor:
    """A dense matrix (or scalar) value with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"


class Tape:
    """Ordered record of primitive ops; replayed backwards for gradients."""

    def __init__(self):
        self._records: list[tuple[tuple[Tensor, ...], Tensor, Callable]] = []

    def __len__(self) -> int:
        return len(self._records)

    def record(self, inputs: tuple[Tensor, ...], output: Tensor,
               backward: Callable[[np.ndarray], tuple]) -> None:
        """`backward` maps d(output) to per-input gradients (None for constants)."""
        self._records.append((inputs, output, backward))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(param) into .grad of every recorded tensor that requires it."""
        if loss.data.size != 1:
            raise ValueError("backward expects a scalar loss")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        alive: dict[int, Tensor] = {id(loss): loss}
        for inputs, output, backward_fn in reversed(self._records):
            out_grad = grads.pop(id(output), None)
            alive.pop(id(output), None)
            if out_grad is None:
                continue
            in_grads = backward_fn(out_grad)
            for tensor, grad in zip(inputs, in_grads):
                if grad is None:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad
                    alive[key] = tensor
        for key, tensor in alive.items():
            if tensor.requires_grad:
                if tensor.grad is None:
                    tensor.grad = np.array(grads[key])
                else:
                    tensor.grad = tensor.grad + grads[key]


def param(data, name: str = "", dtype=None) -> Tensor:
    """Trainable parameter tensor; dtype of `data` is kept unless overridden."""
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    return Tensor(arr, requires_grad=True, name=name)


def constant(data, dtype=None) -> Tensor:
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    return Tensor(arr)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)

"""Differentiable primitives recorded on a Tape.

Every function takes the tape first; passing tape=None runs forward-only
(inference). Backward rules are hand-written and covered by finite-difference
checks in the test suite.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .tape import Tape, Tensor

EPS = 1e-5


def _emit(tape: Tape | None, inputs: tuple[Tensor, ...], out: Tensor, backward) -> Tensor:
    if tape is not None:
        tape.record(inputs, out, backward)
    return out


def matmul(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _emit(tape, (a, b), out, backward)


def spmm(tape: Tape | None, a: sp.spmatrix, x: Tensor,
         a_t: sp.spmatrix | None = None) -> Tensor:
    """Sparse-dense product A @ x; backward multiplies by A^T.

    Symmetric matrices (the normalized adjacency) need no a_t; pass the
    precomputed transpose for non-symmetric propagation matrices.
    """
    if a.shape[1] != x.data.shape[0]:
        raise ValueError(f"spmm dimension mismatch: {a.shape} @ {x.shape}")
    dtype = x.data.dtype
    back = a if a_t is None else a_t
    out = Tensor((a @ x.data).astype(dtype, copy=False))

    def backward(g):
        return ((back @ g).astype(dtype, copy=False),)

    return _emit(tape, (x,), out, backward)


def add(tape: Tape | None, a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data)
    return _emit(tape, (a, b), out, lambda g: (g, g))


def add_bias(tape: Tape | None, x: Tensor, b: Tensor) -> Tensor:
    """Row-broadcast bias; b has shape (d,)."""
    out = Tensor(x.data + b.data)
    return _emit(tape, (x, b), out, lambda g: (g, g.sum(axis=0)))


def scale(tape: Tape | None, x: Tensor, c: float) -> Tensor:
    out = Tensor(x.data * c)
    return _emit(tape, (x,), out, lambda g: (g * c,))


def relu(tape: Tape | None, x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0))
    mask = x.data > 0
    return _emit(tape, (x,), out, lambda g: (g * mask,))


def dropout(tape: Tape | None, x: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call only in training mode."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p) / (1.0 - p)
    keep = keep.astype(x.data.dtype)
    out = Tensor(x.data * keep)
    return _emit(tape, (x,), out, lambda g: (g * keep,))


def concat(tape: Tape | None, parts: list[Tensor]) -> Tensor:
    """Concatenate along the feature axis."""
    out = Tensor(np.concatenate([p.data for p in parts], axis=1))
    widths = [p.data.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        return tuple(g[:, offsets[k]:offsets[k + 1]] for k in range(len(parts)))

    return _emit(tape, tuple(parts), out, backward)


def sum_sq(tape: Tape | None, x: Tensor) -> Tensor:
    """Sum of squared entries (squared Frobenius norm), as a scalar."""
    out = Tensor(np.asarray((x.data ** 2).sum(), dtype=x.data.dtype))
    return _emit(tape, (x,), out, lambda g: (2.0 * g * x.data,))


# ---------------------------------------------------------------------------
# losses


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def cross_entropy(tape: Tape | None, logits: Tensor, labels: np.ndarray,
                  mask: np.ndarray) -> Tensor:
    """Mean negative log-likelihood over the masked node ids."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("cross_entropy: empty mask")
    y = np.asarray(labels)[mask]
    if (y < 0).any():
        raise ValueError("cross_entropy: unlabeled node (-1) inside mask")
    z = logits.data[mask]
    logp = log_softmax(z.astype(np.float64))
    loss = -logp[np.arange(len(mask)), y].mean()
    out = Tensor(np.asarray(loss, dtype=logits.data.dtype))

    def backward(g):
        grad = np.zeros_like(logits.data)
        delta = softmax(z.astype(np.float64))
        delta[np.arange(len(mask)), y] -= 1.0
        grad[mask] = (g * delta / len(mask)).astype(logits.data.dtype)
        return (grad,)

    return _emit(tape, (logits,), out, backward)


def mse(tape: Tape | None, pred: Tensor, target: Tensor, mask: np.ndarray) -> Tensor:
    """Mean squared difference over masked rows and all columns."""
    if pred.data.shape != target.data.shape:
        raise ValueError(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("mse: empty mask")
    diff = pred.data[mask] - target.data[mask]
    denom = diff.size
    out = Tensor(np.asarray((diff ** 2).sum() / denom, dtype=pred.data.dtype))

    def backward(g):
        grad = np.zeros_like(pred.data)
        grad[mask] = (2.0 / denom) * g * diff
        return grad, None

    return _emit(tape, (pred, target), out, backward)


def pairwise_logistic_loss(tape: Tape | None, z: Tensor, pos_pairs: np.ndarray,
                           neg_pairs: np.ndarray) -> Tensor:
    """Edge-classification loss: sigmoid(z_i . z_j) should be 1 on positives, 0 on negatives."""
    pos = np.asarray(pos_pairs, dtype=np.int64).reshape(-1, 2)
    neg = np.asarray(neg_pairs, dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("pairwise_logistic_loss: no positive pairs")
    zd = z.data.astype(np.float64)
    s_pos = (zd[pos[:, 0]] * zd[pos[:, 1]]).sum(axis=1)
    s_neg = (zd[neg[:, 0]] * zd[neg[:, 1]]).sum(axis=1)
    total = len(pos) + len(neg)
    loss = (np.logaddexp(0.0, -s_pos).sum() + np.logaddexp(0.0, s_neg).sum()) / total
    out = Tensor(np.asarray(loss, dtype=z.data.dtype))

    def backward(g):
        grad = np.zeros_like(zd)
        coef_pos = -_sigmoid(-s_pos) * (g / total)
        coef_neg = _sigmoid(s_neg) * (g / total)
        np.add.at(grad, pos[:, 0], coef_pos[:, None] * zd[pos[:, 1]])
        np.add.at(grad, pos[:, 1], coef_pos[:, None] * zd[pos[:, 0]])
        np.add.at(grad, neg[:, 0], coef_neg[:, None] * zd[neg[:, 1]])
        np.add.at(grad, neg[:, 1], coef_neg[:, None] * zd[neg[:, 0]])
        return (grad.astype(z.data.dtype),)

    return _emit(tape, (z,), out, backward)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# ---------------------------------------------------------------------------
# normalization layers


def batch_norm(tape: Tape | None, x: Tensor, gamma: Tensor, beta: Tensor,
               eps: float = EPS) -> Tensor:
    """Per-column standardization over all rows with learnable scale and shift.

    Statistics are recomputed from the full batch each call (full-batch
    training: no running averages).
    """
    mu = x.data.mean(axis=0)
    var = x.data.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = Tensor(gamma.data * xhat + beta.data)
    n = x.data.shape[0]

    def backward(g):
        dgamma = (g * xhat).sum(axis=0)
        dbeta = g.sum(axis=0)
        gx = g * gamma.data
        dx = inv_std * (gx - gx.mean(axis=0) - xhat * (gx * xhat).mean(axis=0))
        return dx, dgamma, dbeta

    _ = n
    return _emit(tape, (x, gamma, beta), out, backward)


def pair_norm(tape: Tape | None, x: Tensor, eps: float = EPS) -> Tensor:
    """Center columns, then scale all rows so the mean squared row norm is 1 (s=1)."""
    xc = x.data - x.data.mean(axis=0)
    n = x.data.shape[0]
    m = (xc ** 2).sum() / n
    r = np.sqrt(m + eps)
    out = Tensor(xc / r)

    def backward(g):
        dxc = g / r - xc * ((g * xc).sum() / (n * r ** 3))
        return (dxc - dxc.mean(axis=0),)

    return _emit(tape, (x,), out, backward)


def node_norm(tape: Tape | None, x: Tensor, eps: float = EPS) -> Tensor:
    """Each row divided by its L2 norm (epsilon-guarded)."""
    norms = np.sqrt((x.data ** 2).sum(axis=1, keepdims=True) + eps)
    out = Tensor(x.data / norms)

    def backward(g):
        dot = (g * x.data).sum(axis=1, keepdims=True)
        return (g / norms - x.data * dot / norms ** 3,)

    return _emit(tape, (x,), out, backward)


def mean_norm(tape: Tape | None, x: Tensor) -> Tensor:
    """Subtract column means."""
    out = Tensor(x.data - x.data.mean(axis=0))
    return _emit(tape, (x,), out, lambda g: (g - g.mean(axis=0),))


NORM_KINDS = ("none", "batch", "pair", "node", "mean")


def normalize_layer(tape: Tape | None, x: Tensor, kind: str,
                    gamma: Tensor | None = None, beta: Tensor | None = None) -> Tensor:
    """Dispatch over the supported normalization kinds; batch requires gamma/beta."""
    if kind == "none":
        return x
    if kind == "batch":
        if gamma is None or beta is None:
            raise ValueError("batch normalization needs gamma and beta parameters")
        return batch_norm(tape, x, gamma, beta)
    if kind == "pair":
        return pair_norm(tape, x)
    if kind == "node":
        return node_norm(tape, x)
    if kind == "mean":
        return mean_norm(tape, x)
    raise ValueError(f"unknown normalization kind {kind!r}; expected one of {NORM_KINDS}")

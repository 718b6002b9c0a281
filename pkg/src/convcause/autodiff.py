"""Dense float64 tensors with reverse-mode automatic differentiation.

Everything trainable in this package runs on the small op set below: a
``Tensor`` wraps a numpy array, ops executed inside a ``Tape`` context
record backward closures, and ``backward`` replays the tape in reverse to
accumulate gradients into every ``requires_grad`` tensor.

Ops raise on non-finite outputs: a NaN/Inf anywhere is treated as a bug in
the caller, never silently propagated.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

__all__ = [
    "Tensor",
    "Tape",
    "add",
    "sub",
    "mul",
    "neg",
    "matmul",
    "transpose",
    "concat",
    "narrow",
    "embedding",
    "softmax",
    "sigmoid",
    "tanh",
    "gelu",
    "dropout",
    "layer_norm",
    "tsum",
    "tmean",
    "scale",
    "bilinear_arc",
    "bilinear_label",
    "assemble_span_tensor",
    "bce_with_logits",
    "masked_softmax_ce",
    "backward",
]

_EPS_LN = 1e-5


class Tensor:
    """Dense float64 array plus an optional same-shape gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class _Node:
    __slots__ = ("output", "inputs", "backward_fn")

    def __init__(self, output: Tensor, inputs: tuple[Tensor, ...], backward_fn: Callable):
        self.output = output
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of executed ops; creation order is topological order."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self.nodes)


_TAPE_STACK: list[Tape] = []


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _check_finite(value: np.ndarray, op: str) -> None:
    # single reduction: any NaN/Inf cell makes the sum non-finite (an
    # overflowing sum of finite cells is equally an error state here)
    if not np.isfinite(value.sum()):
        raise FloatingPointError(f"non-finite values produced by op '{op}'")


def _make(value: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: Callable, op: str) -> Tensor:
    _check_finite(value, op)
    out = Tensor(value)
    out.requires_grad = any(t.requires_grad for t in inputs)
    tape = _active_tape()
    if tape is not None and out.requires_grad:
        tape.nodes.append(_Node(out, inputs, backward_fn))
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise / structural ops
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(_unbroadcast(g, a.data.shape))
        b.accumulate(_unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), bw, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(_unbroadcast(g, a.data.shape))
        b.accumulate(_unbroadcast(-g, b.data.shape))

    return _make(a.data - b.data, (a, b), bw, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(a.data * b.data, (a, b), bw, "mul")


def neg(a: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(-g)

    return _make(-a.data, (a,), bw, "neg")


def scale(a: Tensor, k: float) -> Tensor:
    def bw(g):
        a.accumulate(g * k)

    return _make(a.data * k, (a,), bw, "scale")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")

    def bw(g):
        a.accumulate(g @ b.data.T)
        b.accumulate(a.data.T @ g)

    return _make(a.data @ b.data, (a, b), bw, "matmul")


def transpose(a: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(g.T)

    return _make(a.data.T, (a,), bw, "transpose")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            t.accumulate(g[tuple(idx)])

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), bw, "concat")


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice along one axis."""
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def bw(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        a.accumulate(full)

    return _make(a.data[idx], (a,), bw, "narrow")


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError(f"embedding id out of range for table of {table.data.shape[0]} rows")

    def bw(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        table.accumulate(full)

    return _make(table.data[ids], (table,), bw, "embedding")


# ---------------------------------------------------------------------------
# nonlinearities and normalization
# ---------------------------------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        dot = np.sum(g * out, axis=axis, keepdims=True)
        a.accumulate(out * (g - dot))

    return _make(out, (a,), bw, "softmax")


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid(a.data)

    def bw(g):
        a.accumulate(g * out * (1.0 - out))

    return _make(out, (a,), bw, "sigmoid")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bw(g):
        a.accumulate(g * (1.0 - out * out))

    return _make(out, (a,), bw, "tanh")


_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(a: Tensor) -> Tensor:
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    out = x * cdf

    def bw(g):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        a.accumulate(g * (cdf + x * pdf))

    return _make(out, (a,), bw, "gelu")


def dropout(a: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: keep cells with probability 1-rate and rescale by
    1/(1-rate) so the expected value is preserved; identity in eval mode."""
    if not training or rate == 0.0:
        return a
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    keep = 1.0 - rate
    mask = (rng.random(a.data.shape) < keep) / keep

    def bw(g):
        a.accumulate(g * mask)

    return _make(a.data * mask, (a,), bw, "dropout")


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = _EPS_LN) -> Tensor:
    """Normalize over the last axis, then scale/shift."""
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gamma.data + beta.data

    def bw(g):
        n = a.data.shape[-1]
        gxh = g * gamma.data
        a.accumulate(
            inv / n * (n * gxh - gxh.sum(axis=-1, keepdims=True) - xhat * (gxh * xhat).sum(axis=-1, keepdims=True))
        )
        gamma.accumulate(_unbroadcast(g * xhat, gamma.data.shape))
        beta.accumulate(_unbroadcast(g, beta.data.shape))

    return _make(out, (a, gamma, beta), bw, "layer_norm")


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


def tsum(a: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(np.full_like(a.data, float(g)))

    return _make(np.sum(a.data), (a,), bw, "sum")


def tmean(a: Tensor) -> Tensor:
    n = a.data.size

    def bw(g):
        a.accumulate(np.full_like(a.data, float(g) / n))

    return _make(np.mean(a.data), (a,), bw, "mean")


# ---------------------------------------------------------------------------
# biaffine products
# ---------------------------------------------------------------------------


def bilinear_arc(c: Tensor, w: Tensor, e: Tensor) -> Tensor:
    """Arc score matrix A with A[i, j] = c_i^T  W  e_j.

    Rows index the cause utterance, columns the effect utterance.
    """
    m, d = c.data.shape
    if w.data.shape != (d, d) or e.data.shape[1] != d:
        raise ValueError(
            f"bilinear_arc shape mismatch: C {c.data.shape}, W {w.data.shape}, E {e.data.shape}"
        )
    cw = c.data @ w.data
    out = cw @ e.data.T

    def bw(g):
        c.accumulate(g @ e.data @ w.data.T)
        w.accumulate(c.data.T @ g @ e.data)
        e.accumulate(g.T @ cw)

    return _make(out, (c, w, e), bw, "bilinear_arc")


_EINSUM_PATHS: dict[tuple, list] = {}


def _einsum(spec: str, *arrays: np.ndarray) -> np.ndarray:
    # einsum path search is Python-level overhead; cache it per shape set
    key = (spec,) + tuple(a.shape for a in arrays)
    path = _EINSUM_PATHS.get(key)
    if path is None:
        path = np.einsum_path(spec, *arrays, optimize="optimal")[0]
        _EINSUM_PATHS[key] = path
    return np.einsum(spec, *arrays, optimize=path)


def bilinear_label(c: Tensor, w: Tensor, e: Tensor) -> Tensor:
    """Label score tensor T with T[i, j, l] = c_i^T  W[:, l, :]  e_j.

    W has shape (d, n_labels, d); the output is (m, m, n_labels).
    """
    if c.data.ndim != 2 or e.data.ndim != 2 or w.data.ndim != 3:
        raise ValueError("bilinear_label expects C (m,d), W (d,L,d), E (m,d)")
    d = c.data.shape[1]
    if w.data.shape[0] != d or w.data.shape[2] != e.data.shape[1] or e.data.shape[1] != d:
        raise ValueError(
            f"bilinear_label shape mismatch: C {c.data.shape}, W {w.data.shape}, E {e.data.shape}"
        )
    out = _einsum("ia,alb,jb->ijl", c.data, w.data, e.data)

    def bw(g):
        c.accumulate(_einsum("ijl,alb,jb->ia", g, w.data, e.data))
        w.accumulate(_einsum("ijl,ia,jb->alb", g, c.data, e.data))
        e.accumulate(_einsum("ijl,ia,alb->jb", g, c.data, w.data))

    return _make(out, (c, w, e), bw, "bilinear_label")


def assemble_span_tensor(per_cause: Sequence[Tensor], max_len: int) -> Tensor:
    """Stack per-cause (m, len_i) score matrices into a dense (m, m, max_len)
    tensor, zero-filling columns past each cause utterance's real length."""
    m = len(per_cause)
    out = np.zeros((m, m, max_len))
    lengths = []
    for i, s in enumerate(per_cause):
        li = s.data.shape[1]
        if s.data.shape[0] != m or li > max_len:
            raise ValueError(f"span slice {i} has shape {s.data.shape}, expected ({m}, <= {max_len})")
        lengths.append(li)
        out[i, :, :li] = s.data

    def bw(g):
        for i, (s, li) in enumerate(zip(per_cause, lengths)):
            s.accumulate(g[i, :, :li])

    return _make(out, tuple(per_cause), bw, "assemble_span_tensor")


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def bce_with_logits(scores: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean binary cross-entropy over masked cells, from raw logits.

    Uses the max(s,0) - s*t + log1p(exp(-|s|)) form, stable for any logit
    magnitude.
    """
    targets = np.asarray(targets, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if targets.shape != scores.data.shape or mask.shape != scores.data.shape:
        raise ValueError("bce_with_logits: scores, targets and mask must share a shape")
    count = mask.sum()
    if count == 0:
        raise ValueError("bce_with_logits: mask selects no cells")
    s = scores.data
    cell = np.maximum(s, 0.0) - s * targets + np.log1p(np.exp(-np.abs(s)))
    out = np.sum(cell * mask) / count

    def bw(g):
        scores.accumulate(float(g) * mask * (_sigmoid(s) - targets) / count)

    return _make(out, (scores,), bw, "bce_with_logits")


def masked_softmax_ce(logits: Tensor, target: np.ndarray) -> Tensor:
    """Mean cross-entropy over the last axis, restricted to cells where the
    integer target is not the -1 sentinel."""
    target = np.asarray(target, dtype=np.int64)
    if logits.data.ndim != target.ndim + 1 or logits.data.shape[:-1] != target.shape:
        raise ValueError("masked_softmax_ce: target must index all but the last logits axis")
    sel = target != -1
    count = int(sel.sum())
    if count == 0:
        raise ValueError("masked_softmax_ce: no non-sentinel target cells")
    n_labels = logits.data.shape[-1]
    if target[sel].min() < 0 or target[sel].max() >= n_labels:
        raise ValueError("masked_softmax_ce: target label out of range")

    x = logits.data
    xmax = x.max(axis=-1)
    lse = xmax + np.log(np.sum(np.exp(x - xmax[..., None]), axis=-1))
    gold = np.take_along_axis(x, np.where(sel, target, 0)[..., None], axis=-1)[..., 0]
    out = np.sum((lse - gold)[sel]) / count

    def bw(g):
        probs = np.exp(x - lse[..., None])
        onehot = np.zeros_like(x)
        idx = np.nonzero(sel)
        onehot[idx + (target[sel],)] = 1.0
        logits.accumulate(float(g) * sel[..., None] * (probs - onehot) / count)

    return _make(out, (logits,), bw, "masked_softmax_ce")


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------


def backward(root: Tensor, tape: Tape) -> None:
    """Accumulate d(root)/d(tensor) into .grad for every tensor reachable
    from `root` through `tape`.

    Leaf tensors (tape inputs) keep accumulating across repeated calls;
    tape outputs are scratch and are reset at the start of each call.
    """
    if root.data.shape != ():
        raise ValueError(f"backward root must be scalar, got shape {root.data.shape}")
    if not any(node.output is root for node in tape.nodes):
        raise ValueError("backward root is not an output recorded on this tape")
    for node in tape.nodes:
        node.output.grad = None
    root.accumulate(np.asarray(1.0))
    for node in reversed(tape.nodes):
        g = node.output.grad
        if g is None:
            continue
        node.backward_fn(g)

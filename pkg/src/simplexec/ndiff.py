"""A small reverse-mode autodiff core over dense 2-D float64 arrays.

Only the operations the executor needs are provided.  Every forward op
records a closure on a :class:`GradTape`; :meth:`GradTape.backward` replays
them in reverse.  Parameters are :class:`Tensor` objects whose ``grad`` is
pre-allocated (usually a view into a flat gradient buffer) and accumulated
into; intermediate gradients are allocated on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import math

import numpy as np

from .errors import NonFiniteError, ShapeError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, grad=None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {data.shape}")
        self.data = data
        self.requires_grad = requires_grad
        self.name = name
        self.grad = grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def zero_grad(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad[...] = 0.0

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"


def parameter(data, name: str | None = None) -> Tensor:
    t = Tensor(data, requires_grad=True, name=name)
    t.zero_grad()
    return t


def _accumulate(t: Tensor, g: np.ndarray, owned: bool = False) -> None:
    # ``owned`` means no other pending tensor holds ``g``, so it can be adopted as is
    if t.grad is None:
        t.grad = g if owned else np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _check_finite(out: np.ndarray, op: str) -> np.ndarray:
    # a single reduction: NaN and inf both propagate into the sum
    if not math.isfinite(np.add.reduce(out, axis=None)):
        raise NonFiniteError(f"{op} produced non-finite values")
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    out = np.tanh(0.5 * x)
    out += 1.0
    out *= 0.5
    return out


class Segments:
    """Grouping of row positions by an integer key, reused across steps.

    ``order`` sorts the positions by key; ``starts`` marks where each run of
    equal keys begins and ``keys`` holds the key of each run.
    """

    __slots__ = ("index", "order", "starts", "keys", "run_of")

    def __init__(self, index):
        index = np.asarray(index, dtype=np.int64)
        if index.ndim != 1:
            raise ShapeError(f"segment index must be 1-D, got shape {index.shape}")
        self.index = index
        self.order = np.argsort(index, kind="stable")
        ordered = index[self.order]
        boundary = np.empty(len(index), dtype=bool)
        boundary[:1] = True
        np.not_equal(ordered[1:], ordered[:-1], out=boundary[1:])
        self.starts = np.flatnonzero(boundary)
        self.keys = ordered[self.starts]
        self.run_of = np.cumsum(boundary) - 1

    def __len__(self):
        return len(self.index)


def _segments(index) -> Segments:
    return index if isinstance(index, Segments) else Segments(index)


class GradTape:
    """Records forward operations and replays their gradients in reverse.

    With ``enabled=False`` nothing is recorded, which is what inference uses.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._backward: list[tuple[Tensor, Callable[[], None]]] = []

    def __len__(self):
        return len(self._backward)

    def _result(self, data: np.ndarray, op: str, parents: Sequence[Tensor]) -> Tensor:
        _check_finite(data, op)
        return Tensor(data, requires_grad=self.enabled and any(p.requires_grad for p in parents))

    # -- forward ops -------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
        out = self._result(a.data @ b.data, "matmul", (a, b))
        if out.requires_grad:
            def back():
                g = out.grad
                if a.requires_grad:
                    _accumulate(a, g @ b.data.T, owned=True)
                if b.requires_grad:
                    _accumulate(b, a.data.T @ g, owned=True)
            self._backward.append((out, back))
        return out

    def add_bias(self, x: Tensor, bias: Tensor) -> Tensor:
        if bias.shape != (1, x.shape[1]):
            raise ShapeError(f"add_bias: input {x.shape}, bias {bias.shape}")
        out = self._result(x.data + bias.data, "add_bias", (x, bias))
        if out.requires_grad:
            def back():
                if x.requires_grad:
                    _accumulate(x, out.grad, owned=True)
                if bias.requires_grad:
                    _accumulate(bias, out.grad.sum(axis=0, keepdims=True))
            self._backward.append((out, back))
        return out

    def linear(self, x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
        """``x @ weight + bias`` as a single recorded op."""
        if x.shape[1] != weight.shape[0]:
            raise ShapeError(f"linear: {x.shape} @ {weight.shape}")
        if bias is not None and bias.shape != (1, weight.shape[1]):
            raise ShapeError(f"linear: bias {bias.shape} for output width {weight.shape[1]}")
        y = x.data @ weight.data
        if bias is not None:
            y += bias.data
        parents = (x, weight) if bias is None else (x, weight, bias)
        out = self._result(y, "linear", parents)
        if out.requires_grad:
            def back():
                g = out.grad
                if x.requires_grad:
                    _accumulate(x, g @ weight.data.T, owned=True)
                if weight.requires_grad:
                    _accumulate(weight, x.data.T @ g, owned=True)
                if bias is not None and bias.requires_grad:
                    _accumulate(bias, g.sum(axis=0, keepdims=True), owned=True)
            self._backward.append((out, back))
        return out

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"add: {a.shape} + {b.shape}")
        out = self._result(a.data + b.data, "add", (a, b))
        if out.requires_grad:
            def back():
                if a.requires_grad:
                    _accumulate(a, out.grad, owned=True)
                if b.requires_grad:
                    _accumulate(b, out.grad, owned=not a.requires_grad)
            self._backward.append((out, back))
        return out

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"mul: {a.shape} * {b.shape}")
        out = self._result(a.data * b.data, "mul", (a, b))
        if out.requires_grad:
            def back():
                if a.requires_grad:
                    _accumulate(a, out.grad * b.data, owned=True)
                if b.requires_grad:
                    _accumulate(b, out.grad * a.data, owned=True)
            self._backward.append((out, back))
        return out

    def one_minus(self, a: Tensor) -> Tensor:
        out = self._result(1.0 - a.data, "one_minus", (a,))
        if out.requires_grad:
            self._backward.append((out, lambda: _accumulate(a, -out.grad, owned=True)))
        return out

    def concat_cols(self, parts: Sequence[Tensor]) -> Tensor:
        rows = {p.shape[0] for p in parts}
        if len(rows) != 1:
            raise ShapeError(f"concat_cols: row counts differ {[p.shape for p in parts]}")
        out = self._result(np.concatenate([p.data for p in parts], axis=1), "concat_cols", parts)
        if out.requires_grad:
            bounds = np.cumsum([0] + [p.shape[1] for p in parts])

            def back():
                for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
                    if p.requires_grad:
                        _accumulate(p, out.grad[:, lo:hi], owned=True)
            self._backward.append((out, back))
        return out

    def gather_rows(self, x: Tensor, index) -> Tensor:
        """Rows ``x[index]``; ``index`` may be a prebuilt :class:`Segments`."""
        seg = _segments(index)
        out = self._result(x.data[seg.index], "gather_rows", (x,))
        if out.requires_grad and len(seg):
            def back():
                g = np.zeros_like(x.data)
                g[seg.keys] = np.add.reduceat(out.grad[seg.order], seg.starts, axis=0)
                _accumulate(x, g, owned=True)
            self._backward.append((out, back))
        return out

    def sigmoid(self, x: Tensor) -> Tensor:
        s = _sigmoid(x.data)
        out = self._result(s, "sigmoid", (x,))
        if out.requires_grad:
            self._backward.append((out, lambda: _accumulate(x, out.grad * s * (1.0 - s), owned=True)))
        return out

    def tanh(self, x: Tensor) -> Tensor:
        th = np.tanh(x.data)
        out = self._result(th, "tanh", (x,))
        if out.requires_grad:
            self._backward.append((out, lambda: _accumulate(x, out.grad * (1.0 - th * th), owned=True)))
        return out

    def segment_max(self, messages: Tensor, destination, node_count: int) -> Tensor:
        """Column-wise max of the messages sent to each node.

        Nodes receiving nothing get zeros.  The gradient flows only to the
        maximising message; ties go to the lowest message index.
        ``destination`` may be a prebuilt :class:`Segments`.
        """
        seg = _segments(destination)
        if seg.index.shape != (messages.shape[0],):
            raise ShapeError(f"segment_max: {messages.shape[0]} messages, {seg.index.shape} ids")
        if len(seg) and (seg.keys[0] < 0 or seg.keys[-1] >= node_count):
            raise ShapeError(f"segment_max: destination ids outside [0, {node_count})")
        cols = messages.shape[1]
        result = np.zeros((node_count, cols))
        if len(seg) == 0:
            return self._result(result, "segment_max", (messages,))
        ordered = messages.data[seg.order]
        maxima = np.maximum.reduceat(ordered, seg.starts, axis=0)
        result[seg.keys] = maxima
        out = self._result(result, "segment_max", (messages,))
        if out.requires_grad:
            def back():
                hit = ordered == maxima[seg.run_of]
                position = np.where(hit, np.arange(len(seg))[:, None], len(seg))
                winner = seg.order[np.minimum.reduceat(position, seg.starts, axis=0)]
                g = np.zeros_like(messages.data)
                g[winner, np.arange(cols)[None, :]] = out.grad[seg.keys]
                _accumulate(messages, g, owned=True)
            self._backward.append((out, back))
        return out

    def mean_rows(self, x: Tensor) -> Tensor:
        if x.shape[0] == 0:
            raise ShapeError("mean_rows of an empty tensor")
        n = x.shape[0]
        out = self._result(np.add.reduce(x.data, axis=0, keepdims=True) / n, "mean_rows", (x,))
        if out.requires_grad:
            self._backward.append((out, lambda: _accumulate(x, np.broadcast_to(out.grad / n, x.shape))))
        return out

    def bce_loss(self, logits: Tensor, targets) -> Tensor:
        """Mean binary cross-entropy computed from logits (log-sum-exp form)."""
        y = np.asarray(targets, dtype=np.float64).reshape(logits.shape)
        x = logits.data
        losses = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
        out = self._result(np.array([[losses.mean()]]), "bce_loss", (logits,))
        if out.requires_grad:
            n = x.size
            self._backward.append((out, lambda: _accumulate(logits, out.grad[0, 0] * (_sigmoid(x) - y) / n, owned=True)))
        return out

    # -- reverse pass ------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        if loss.shape != (1, 1):
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        loss.grad = np.ones((1, 1))
        for out, back in reversed(self._backward):
            if out.grad is not None:
                back()
        self._backward.clear()


# -- GRU ------------------------------------------------------------------------

@dataclass
class GRUParams:
    """Update gate z, reset gate r and candidate n, each with input/hidden weights and a bias."""

    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_n: Tensor
    u_n: Tensor
    b_n: Tensor


def gru_cell(tape: GradTape, x: Tensor, h: Tensor, p: GRUParams) -> Tensor:
    """h' = (1 - z) * n + z * h  with  n = tanh(x W_n + (r * h) U_n + b_n).

    Recorded as one op with a hand-written backward; the three input
    projections share a single matmul.
    """
    if x.shape != h.shape:
        raise ShapeError(f"gru_cell: input {x.shape} vs hidden {h.shape}")
    k = h.shape[1]
    if p.w_z.shape != (k, k):
        raise ShapeError(f"gru_cell: weights {p.w_z.shape} for hidden width {k}")
    w = np.concatenate([p.w_z.data, p.w_r.data, p.w_n.data], axis=1)
    u = np.concatenate([p.u_z.data, p.u_r.data], axis=1)
    gx = x.data @ w
    gh = h.data @ u
    z = _sigmoid(gx[:, :k] + gh[:, :k] + p.b_z.data)
    r = _sigmoid(gx[:, k:2 * k] + gh[:, k:] + p.b_r.data)
    rh = r * h.data
    n = np.tanh(gx[:, 2 * k:] + rh @ p.u_n.data + p.b_n.data)
    diff = h.data - n
    weights = (p.w_z, p.u_z, p.b_z, p.w_r, p.u_r, p.b_r, p.w_n, p.u_n, p.b_n)
    out = tape._result(n + z * diff, "gru_cell", (x, h, *weights))
    if out.requires_grad:
        def back():
            g = out.grad
            d_n = g * (1.0 - z)
            d_n *= 1.0 - n * n
            d_rh = d_n @ p.u_n.data.T
            d_z = g * diff
            d_z *= z * (1.0 - z)
            d_r = d_rh * h.data
            d_r *= r * (1.0 - r)
            d_gx = np.concatenate([d_z, d_r, d_n], axis=1)
            d_gh = d_gx[:, :2 * k]
            if x.requires_grad:
                _accumulate(x, d_gx @ w.T, owned=True)
            if h.requires_grad:
                d_h = g * z
                d_h += d_rh * r
                d_h += d_gh @ u.T
                _accumulate(h, d_h, owned=True)
            d_w = x.data.T @ d_gx
            d_u = h.data.T @ d_gh
            d_b = d_gx.sum(axis=0, keepdims=True)
            for gate, (wt, ut, bt) in enumerate(((p.w_z, p.u_z, p.b_z), (p.w_r, p.u_r, p.b_r))):
                cols = slice(gate * k, (gate + 1) * k)
                for param, grad in ((wt, d_w[:, cols]), (ut, d_u[:, cols]), (bt, d_b[:, cols])):
                    if param.requires_grad:
                        _accumulate(param, grad)
            for param, grad in ((p.w_n, d_w[:, 2 * k:]), (p.u_n, rh.T @ d_n), (p.b_n, d_b[:, 2 * k:])):
                if param.requires_grad:
                    _accumulate(param, grad)
        tape._backward.append((out, back))
    return out


# -- gradient checking ----------------------------------------------------------

def check_gradients(loss_fn: Callable[[GradTape], Tensor], params: Sequence[Tensor],
                    step: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest relative error between tape gradients and central differences.

    The relative error of one entry is ``|a - n| / max(|a|, |n|, floor)``;
    the floor keeps entries whose true gradient is ~0 from dividing by noise.
    """
    for p in params:
        p.zero_grad()
    tape = GradTape()
    tape.backward(loss_fn(tape))
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn(GradTape()).data[0, 0]
            flat[i] = orig - step
            down = loss_fn(GradTape()).data[0, 0]
            flat[i] = orig
            numeric = (up - down) / (2 * step)
            a = grad.reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), floor))
    return worst


# -- Adam -----------------------------------------------------------------------

@dataclass
class AdamState:
    learning_rate: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """One bias-corrected Adam update, applied to ``params`` in place (and returned).

    Uses the folded form ``lr_t = lr * sqrt(1 - b2^t) / (1 - b1^t)`` with
    ``eps_t = eps * sqrt(1 - b2^t)``, which equals the textbook update.
    """
    if params.shape != grads.shape:
        raise ShapeError(f"adam_step: params {params.shape} vs grads {grads.shape}")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    elif state.m.shape != params.shape:
        raise ShapeError(f"adam_step: state {state.m.shape} vs params {params.shape}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction = math.sqrt(1.0 - b2 ** state.step)
    lr_t = state.learning_rate * correction / (1.0 - b1 ** state.step)
    scratch = grads * (1.0 - b1)
    state.m *= b1
    state.m += scratch
    np.multiply(grads, grads, out=scratch)
    scratch *= 1.0 - b2
    state.v *= b2
    state.v += scratch
    np.sqrt(state.v, out=scratch)
    scratch += state.epsilon * correction
    np.divide(state.m, scratch, out=scratch)
    scratch *= lr_t
    params -= scratch
    return params

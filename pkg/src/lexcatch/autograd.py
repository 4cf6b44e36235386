"""Minimal reverse-mode gradient engine over dense numpy arrays.

The model needs a fixed, small op vocabulary (affine maps, pointwise
nonlinearities, column-wise max pooling, score statistics), so the engine
records a flat tape of primitive ops in execution order and replays it in
exact reverse order, accumulating adjoints additively for shared inputs.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class TapeStateError(RuntimeError):
    """Backward requested in a state where no forward work was recorded."""


class Tensor:
    """Dense row-major array plus autodiff bookkeeping.

    Treated as an immutable value by the forward ops; only the optimizer
    writes to ``data`` in place, between tapes.
    """

    __slots__ = ("data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float32 if getattr(data, "dtype", None) == np.float32 else np.float64)
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Arithmetic sugar so the objective reads like the formulas it implements.
    def __add__(self, other):
        return add(self, as_tensor(other, like=self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, as_tensor(other, like=self))

    def __rsub__(self, other):
        return sub(as_tensor(other, like=self), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other, like=self))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, as_tensor(-1.0, like=self))


def as_tensor(value, like: Tensor | None = None) -> Tensor:
    """Wrap a scalar/array as a constant Tensor (no-op on Tensors)."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else np.float64
    return Tensor(np.asarray(value, dtype=dtype))


# One tape is active at a time; training is single-writer by design, so a
# module-level slot (not thread-local) is sufficient and keeps ops cheap.
_ACTIVE_TAPE: "Tape | None" = None


class Tape:
    """Recorded primitive ops, replayed in reverse for backprop.

    Use as a context manager::

        with Tape() as tape:
            loss = ...
        grads = tape.gradients(loss, params)
    """

    def __init__(self):
        self._records: list[tuple[Tensor, Callable[[np.ndarray], list[tuple[Tensor, np.ndarray]]]]] = []
        self._prev: Tape | None = None

    def __enter__(self) -> "Tape":
        global _ACTIVE_TAPE
        self._prev = _ACTIVE_TAPE
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = self._prev
        return False

    def __len__(self) -> int:
        return len(self._records)

    def _record(self, out: Tensor, vjp: Callable[[np.ndarray], list[tuple[Tensor, np.ndarray]]]):
        self._records.append((out, vjp))

    def gradients(self, loss: Tensor, wrt: Sequence[Tensor]) -> list[np.ndarray]:
        """d loss / d t for every tensor in ``wrt`` (zeros when disconnected).

        ``loss`` must be a single-element tensor produced while this tape was
        active. Adjoints for shared inputs accumulate additively.
        """
        if not self._records:
            raise TapeStateError("backward before forward: tape has no recorded ops")
        if loss.data.size != 1:
            raise DimensionError(f"loss must be scalar, got shape {loss.shape}")
        if not loss.requires_grad:
            raise TapeStateError("loss does not depend on any tracked parameter")

        adjoints: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        keep = {id(t) for t in wrt}
        for out, vjp in reversed(self._records):
            g = adjoints.get(id(out))
            if g is None:
                continue
            if id(out) not in keep:
                del adjoints[id(out)]  # out feeds only later (already replayed) records
            for tensor, contribution in vjp(g):
                if not tensor.requires_grad:
                    continue
                slot = adjoints.get(id(tensor))
                if slot is None:
                    # Own the buffer: vjps may hand back views of g or g itself,
                    # and in-place accumulation must never write through those.
                    adjoints[id(tensor)] = np.array(contribution)
                else:
                    slot += contribution
        return [adjoints.get(id(t), np.zeros_like(t.data)) for t in wrt]


def backward(tape: Tape, loss: Tensor, wrt: Sequence[Tensor]) -> list[np.ndarray]:
    """Functional alias for :meth:`Tape.gradients`."""
    return tape.gradients(loss, wrt)


def _emit(out_data: np.ndarray, inputs: Iterable[Tensor], vjp) -> Tensor:
    out = Tensor(out_data, requires_grad=any(t.requires_grad for t in inputs))
    if _ACTIVE_TAPE is not None and out.requires_grad:
        _ACTIVE_TAPE._record(out, vjp)
    return out


def _reduce_to(shape: tuple[int, ...], g: np.ndarray) -> np.ndarray:
    # Undo the two broadcasts add/sub permit: row-vector over rows, scalar over all.
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    return g.sum(axis=0)


def _addable(a: Tensor, b: Tensor) -> bool:
    if a.shape == b.shape:
        return True
    for x, y in ((a, b), (b, a)):
        if y.shape == ():
            return True
        if len(x.shape) == 2 and len(y.shape) == 1 and x.shape[1] == y.shape[0]:
            return True
    return False


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; also allows (n,m)+(m,) row broadcast and scalar+any."""
    if not _addable(a, b):
        raise DimensionError(f"add: incompatible shapes {a.shape} vs {b.shape}")
    out_data = a.data + b.data

    def vjp(g):
        return [(a, _reduce_to(a.shape, g)), (b, _reduce_to(b.shape, g))]

    return _emit(out_data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise difference with the same broadcast rules as :func:`add`."""
    if not _addable(a, b):
        raise DimensionError(f"sub: incompatible shapes {a.shape} vs {b.shape}")
    out_data = a.data - b.data

    def vjp(g):
        return [(a, _reduce_to(a.shape, g)), (b, -_reduce_to(b.shape, g))]

    return _emit(out_data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; one operand may be a scalar."""
    if not (a.shape == b.shape or a.shape == () or b.shape == ()):
        raise DimensionError(f"mul: incompatible shapes {a.shape} vs {b.shape}")
    out_data = a.data * b.data

    def vjp(g):
        return [
            (a, _reduce_to(a.shape, g * b.data)),
            (b, _reduce_to(b.shape, g * a.data)),
        ]

    return _emit(out_data, (a, b), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product: (n,p)@(p,m) -> (n,m) or (n,p)@(p,) -> (n,)."""
    if len(a.shape) != 2 or len(b.shape) not in (1, 2) or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: incompatible shapes {a.shape} vs {b.shape}")
    out_data = a.data @ b.data

    if len(b.shape) == 2:
        def vjp(g):
            return [(a, g @ b.data.T), (b, a.data.T @ g)]
    else:
        def vjp(g):
            return [(a, np.outer(g, b.data)), (b, a.data.T @ g)]

    return _emit(out_data, (a, b), vjp)


def transpose(a: Tensor) -> Tensor:
    if len(a.shape) != 2:
        raise DimensionError(f"transpose needs a matrix, got shape {a.shape}")
    return _emit(a.data.T, (a,), lambda g: [(a, g.T)])


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along ``axis``; backward splits the adjoint back."""
    parts = list(parts)
    if not parts:
        raise DimensionError("concat of an empty sequence")
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        moved = np.moveaxis(g, axis, 0)
        return [
            (p, np.moveaxis(moved[offsets[i]:offsets[i + 1]], 0, axis))
            for i, p in enumerate(parts)
        ]

    return _emit(out_data, parts, vjp)


def stack_rows(vectors: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a (n, d) matrix."""
    vectors = list(vectors)
    if not vectors:
        raise DimensionError("stack_rows of an empty sequence")
    if any(len(v.shape) != 1 or v.shape != vectors[0].shape for v in vectors):
        raise DimensionError(f"stack_rows needs equal-length vectors, got {[v.shape for v in vectors]}")
    out_data = np.stack([v.data for v in vectors], axis=0)

    def vjp(g):
        return [(v, g[i]) for i, v in enumerate(vectors)]

    return _emit(out_data, vectors, vjp)


def tile_rows(v: Tensor, n: int) -> Tensor:
    """Repeat a vector as n identical rows; adjoint sums over rows."""
    if len(v.shape) != 1:
        raise DimensionError(f"tile_rows needs a vector, got shape {v.shape}")
    out_data = np.broadcast_to(v.data, (n, v.shape[0]))
    return _emit(out_data, (v,), lambda g: [(v, g.sum(axis=0))])


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    out_data = a.data.reshape(shape)
    return _emit(out_data, (a,), lambda g: [(a, g.reshape(a.shape))])


def relu(a: Tensor) -> Tensor:
    """max(x, 0). The kink routes gradient to the zero branch: relu'(0) = 0."""
    out_data = np.maximum(a.data, 0.0)
    mask = a.data > 0.0
    return _emit(out_data, (a,), lambda g: [(a, g * mask)])


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)
    return _emit(out_data, (a,), lambda g: [(a, g * (1.0 - out_data * out_data))])


def sigmoid(a: Tensor) -> Tensor:
    # Stable two-branch logistic; output stays strictly inside (0, 1) for
    # finite inputs within each float's representable range.
    x = a.data
    out_data = np.empty_like(x)
    pos = x >= 0
    out_data[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out_data[~pos] = ex / (1.0 + ex)
    return _emit(out_data, (a,), lambda g: [(a, g * out_data * (1.0 - out_data))])


def max_over_rows(a: Tensor) -> Tensor:
    """Column-wise maximum of a (n, d) matrix -> (d,).

    Records the argmax row per column; backward routes the adjoint only to
    those rows. np.argmax takes the first maximum, so ties break toward the
    lowest row index.
    """
    if len(a.shape) != 2 or a.shape[0] == 0:
        raise DimensionError(f"max_over_rows needs a non-empty matrix, got shape {a.shape}")
    winners = np.argmax(a.data, axis=0)
    out_data = a.data[winners, np.arange(a.shape[1])]

    def vjp(g):
        ga = np.zeros_like(a.data)
        ga[winners, np.arange(a.shape[1])] = g
        return [(a, ga)]

    return _emit(out_data, (a,), vjp)


def mean(a: Tensor) -> Tensor:
    """Arithmetic mean of all elements -> scalar."""
    if a.data.size == 0:
        raise DimensionError("mean of an empty tensor")
    out_data = np.asarray(a.data.mean())
    n = a.data.size
    return _emit(out_data, (a,), lambda g: [(a, np.full_like(a.data, float(g) / n))])


def total(a: Tensor) -> Tensor:
    """Sum of all elements -> scalar."""
    out_data = np.asarray(a.data.sum())
    return _emit(out_data, (a,), lambda g: [(a, np.full_like(a.data, float(g)))])


def population_std(a: Tensor) -> Tensor:
    """Population standard deviation (divisor N) of all elements -> scalar.

    d std/d x_i = (x_i - mean) / (N * std). At std == 0 the function is not
    differentiable; the backward returns zeros there (symmetric subgradient),
    which is the case for single-element inputs.
    """
    if a.data.size == 0:
        raise DimensionError("std of an empty tensor")
    mu = a.data.mean()
    centered = a.data - mu
    out_data = np.asarray(np.sqrt((centered * centered).mean()))
    n = a.data.size

    def vjp(g):
        s = float(out_data)
        if s == 0.0:
            return [(a, np.zeros_like(a.data))]
        return [(a, (float(g) / (n * s)) * centered)]

    return _emit(out_data, (a,), vjp)

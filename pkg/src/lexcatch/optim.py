"""Adam with bias correction, plus global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autograd import Tensor


class NonFiniteGradientError(FloatingPointError):
    """A gradient contained NaN/Inf; the optimizer step was aborted."""


def global_norm(grads: list[np.ndarray]) -> float:
    """L2 norm of all gradient entries taken together."""
    total = 0.0
    for g in grads:
        total += float(np.dot(g.reshape(-1), g.reshape(-1)))
    return float(np.sqrt(total))


def clip_global_norm(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Scale every gradient by max_norm/norm when the global norm exceeds it.

    Scaling is uniform, so direction is preserved; gradients at or under the
    threshold are returned unchanged.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return [g * scale for g in grads]


@dataclass
class AdamState:
    """First/second moment estimates and the step counter, per parameter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[Tensor], beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            t=0,
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(state: AdamState, params: list[Tensor], grads: list[np.ndarray], lr: float) -> None:
    """One Adam update, in place on params.data.

    update = -lr * m_hat / (sqrt(v_hat) + eps) with bias-corrected moments.
    Any non-finite gradient aborts before touching parameters or moments.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError(f"parameter/gradient count mismatch: {len(params)} vs {len(grads)}")
    for p, g in zip(params, grads):
        if p.data.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter shape {p.data.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("non-finite gradient component; step aborted")

    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)

"""Score statistics and the composite soft-constraint ranking loss.

Five orderings are encouraged, each as a hinge (or a direct regularizer):

  o1  mean catchword score above mean sentence-word score,
  o2  catchwords scored against a *different* document fall below that
      document's own sentence words (averaged over the negative set),
  o3  estimated max (mean+std) of catchwords above that of sentence words,
  o4  estimated min (mean-std) of catchwords above the sentence-word mean,
  o5  score variances should not collapse (rewarded, not hinged).

The weighted sum a1*o1 + a2*o2 + b1*o3 + b2*o4 - b3*std_c - b4*std_s is the
per-document training objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .config import RunConfig


@dataclass(frozen=True)
class LossConfig:
    m1: float = 0.1
    m2: float = 0.1
    m3: float = 0.1
    m4: float = 0.1
    a1: float = 1.0
    a2: float = 1.0
    b1: float = 0.5
    b2: float = 0.1
    b3: float = 0.01
    b4: float = 0.02
    negative_set_size: int = 2

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3, self.m4) < 0:
            raise ValueError("margins must be non-negative")
        if self.negative_set_size < 1:
            raise ValueError("negative_set_size must be >= 1")

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "LossConfig":
        return cls(
            m1=cfg.margin1, m2=cfg.margin2, m3=cfg.margin3, m4=cfg.margin4,
            a1=cfg.coeff_a1, a2=cfg.coeff_a2,
            b1=cfg.coeff_b1, b2=cfg.coeff_b2, b3=cfg.coeff_b3, b4=cfg.coeff_b4,
            negative_set_size=cfg.negative_set_size,
        )


@dataclass
class ScoreStats:
    """Differentiable per-document score statistics.

    e_c_cross[i] is the mean score of this document's catchwords evaluated
    against negative document i; e_s_neg[i] is that negative document's own
    mean sentence-word score. Both lists are empty outside training steps.
    """

    e_c: Tensor
    std_c: Tensor
    e_s: Tensor
    std_s: Tensor
    e_c_cross: list[Tensor]
    e_s_neg: list[Tensor]


@dataclass(frozen=True)
class LossBreakdown:
    o1: float
    o2: float
    o3: float
    o4: float
    o5_c: float   # -std_c (unweighted)
    o5_s: float   # -std_s (unweighted)
    total: float

    CSV_FIELDS = ("o1", "o2", "o3", "o4", "o5_c", "o5_s", "total")


def score_statistics(scores) -> tuple[Tensor, Tensor]:
    """(mean, population std) of a non-empty score collection.

    Accepts a Tensor or any sequence of reals; plain inputs are wrapped as
    constants, so callers can .item() the results.
    """
    t = scores if isinstance(scores, Tensor) else Tensor(np.asarray(scores, dtype=np.float64))
    if t.data.size == 0:
        raise ag.DimensionError("score statistics of an empty collection")
    return ag.mean(t), ag.population_std(t)


def _hinge(x: Tensor) -> Tensor:
    # max(x, 0); ties at the kink take the zero branch, matching relu.
    return ag.relu(x)


def loss_o1(e_c, e_s, m1: float) -> Tensor:
    return _hinge(m1 - (ag.as_tensor(e_c) - ag.as_tensor(e_s)))


def loss_o2(e_c_cross: Sequence, e_s_neg: Sequence, m2: float) -> Tensor:
    """Mean hinge over the negative set; the two lists must align."""
    if len(e_c_cross) != len(e_s_neg):
        raise ValueError(f"negative lists misaligned: {len(e_c_cross)} vs {len(e_s_neg)}")
    if not e_c_cross:
        raise ValueError("loss_o2 needs at least one negative document")
    acc = None
    for cross, own in zip(e_c_cross, e_s_neg):
        term = _hinge(m2 - (ag.as_tensor(own) - ag.as_tensor(cross)))
        acc = term if acc is None else acc + term
    return acc * (1.0 / len(e_c_cross))


def loss_o3(e_c, std_c, e_s, std_s, m3: float) -> Tensor:
    high_c = ag.as_tensor(e_c) + ag.as_tensor(std_c)
    high_s = ag.as_tensor(e_s) + ag.as_tensor(std_s)
    return _hinge(m3 - (high_c - high_s))


def loss_o4(e_c, std_c, e_s, m4: float) -> Tensor:
    low_c = ag.as_tensor(e_c) - ag.as_tensor(std_c)
    return _hinge(m4 - (low_c - ag.as_tensor(e_s)))


def loss_o5(std_c, std_s) -> tuple[Tensor, Tensor]:
    """Variance reward terms (-std each); weighted by b3/b4 in the total."""
    return -ag.as_tensor(std_c), -ag.as_tensor(std_s)


def total_loss(stats: ScoreStats, cfg: LossConfig) -> tuple[Tensor, LossBreakdown]:
    """Per-document weighted objective and its logged breakdown.

    Fewer negatives than cfg.negative_set_size are tolerated (degenerate
    small train sets); with none at all the o2 term is skipped entirely.
    """
    if len(stats.e_c_cross) != len(stats.e_s_neg):
        raise ValueError(f"negative lists misaligned: {len(stats.e_c_cross)} vs {len(stats.e_s_neg)}")
    if len(stats.e_c_cross) > cfg.negative_set_size:
        raise ValueError(
            f"{len(stats.e_c_cross)} negatives exceed negative_set_size={cfg.negative_set_size}"
        )

    o1 = loss_o1(stats.e_c, stats.e_s, cfg.m1)
    o3 = loss_o3(stats.e_c, stats.std_c, stats.e_s, stats.std_s, cfg.m3)
    o4 = loss_o4(stats.e_c, stats.std_c, stats.e_s, cfg.m4)
    o5_c, o5_s = loss_o5(stats.std_c, stats.std_s)

    total = cfg.a1 * o1 + cfg.b1 * o3 + cfg.b2 * o4 + cfg.b3 * o5_c + cfg.b4 * o5_s
    if stats.e_c_cross:
        o2 = loss_o2(stats.e_c_cross, stats.e_s_neg, cfg.m2)
        total = total + cfg.a2 * o2
        o2_value = o2.item()
    else:
        o2_value = 0.0

    breakdown = LossBreakdown(
        o1=o1.item(), o2=o2_value, o3=o3.item(), o4=o4.item(),
        o5_c=o5_c.item(), o5_s=o5_s.item(), total=total.item(),
    )
    return total, breakdown

"""Moment functionals of an opinion population and their jump laws.

For opinions x_1..x_N and a target mean m the tracked functionals are

    m1 = (1/N) sum x_i                  (conserved between arrivals)
    m2 = (1/N) sum |x_i|^2
    V  = (1/N) sum |x_i - m1|^2         = m2 - |m1|^2
    W  = (1/N) sum |x_i - m|^2          = V + |m1 - m|^2
    D  = -(1/N^2) sum_ij psi(|x_j - x_i|) |x_j - x_i|^2   (dissipation, <= 0)

Between arrivals m1 is constant and d(m2)/dt = D. When the k-th newcomer X_k
joins a population of N0 + k - 1 agents, each functional jumps by a closed
form in (X_k, pre-arrival moments); ``predict_jumps`` returns those values so
simulations can be checked against them injection by injection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kernels import Kernel

__all__ = [
    "MomentRecord",
    "InjectionJump",
    "SeriesRow",
    "MomentSeries",
    "compute_moments",
    "dissipation_of",
    "predict_jumps",
    "JumpPrediction",
    "m1_closed_form",
    "expected_m1_deviation",
    "MeanDeviationExpectation",
    "variance_jump_coefficient",
]

# Tolerance for the standing decomposition self-checks, relative to the
# magnitude of m2. Violations indicate a bug, not a tolerance problem.
_SELF_CHECK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MomentRecord:
    """Snapshot of the moment functionals at one instant."""

    t: float
    n: int
    m1: np.ndarray
    m2: float
    v: float
    w: float
    dissipation: float


@dataclass(frozen=True, eq=False)
class InjectionJump:
    """The two-sided records around the k-th arrival, plus the arrival."""

    k: int
    x_new: np.ndarray
    pre: MomentRecord
    post: MomentRecord


class SeriesRow(NamedTuple):
    event: str  # "record" | "pre_jump" | "post_jump"
    k: int      # arrivals applied so far (pre_jump rows: k-1 applied, index k)
    record: MomentRecord


@dataclass(eq=False)
class MomentSeries:
    """Chronological moment stream of one simulation run.

    ``rows`` is the full output stream (grid records plus both sides of every
    arrival, in time order). ``records`` filters the grid records;
    ``injection_pairs`` pairs up the arrival rows.
    """

    rows: list[SeriesRow]
    injection_pairs: list[InjectionJump]
    target_mean: np.ndarray
    seed: int
    n0: int
    dim: int
    # cumulative integral of D at event boundaries, when tracking was enabled:
    # list of (t, integral from 0 to t), one entry per row.
    dissipation_checkpoints: list[tuple[float, float]] | None = None

    @property
    def records(self) -> list[MomentRecord]:
        return [row.record for row in self.rows if row.event == "record"]

    def final_record(self) -> MomentRecord:
        return self.rows[-1].record


def compute_moments(state, kernel: Kernel, m) -> MomentRecord:
    """Moment functionals of ``state`` (anything with .t and .opinions).

    W is computed directly by summation and must agree with V + |m1 - m|^2;
    likewise V against m2 - |m1|^2. Disagreement beyond a scale-aware 1e-10
    raises: it is a standing self-check, not a recoverable condition.

    The mean is computed pivot-subtracted (about opinions[0]) so that an
    exactly coincident population yields exactly V = 0.
    """
    x = np.asarray(state.opinions, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("state.opinions must be a nonempty (N, d) array")
    m = np.asarray(m, dtype=float)
    n = x.shape[0]

    dev = x - x[0]
    m1 = x[0] + dev.sum(axis=0) / n
    m2 = float(np.einsum("ij,ij->", x, x)) / n
    cen = x - m1
    v = float(np.einsum("ij,ij->", cen, cen)) / n
    off = x - m
    w = float(np.einsum("ij,ij->", off, off)) / n

    scale = max(1.0, abs(m2))
    if abs(v - (m2 - float(m1 @ m1))) > _SELF_CHECK_TOL * scale:
        raise RuntimeError(
            f"moment self-check failed: V={v!r} vs m2-|m1|^2={m2 - float(m1 @ m1)!r}"
        )
    if abs(w - (v + float((m1 - m) @ (m1 - m)))) > _SELF_CHECK_TOL * scale:
        raise RuntimeError(
            f"moment self-check failed: W={w!r} vs V+|m1-m|^2="
            f"{v + float((m1 - m) @ (m1 - m))!r}"
        )

    d = dissipation_of(x, kernel, v=v)
    return MomentRecord(t=float(state.t), n=n, m1=m1, m2=m2, v=v, w=w, dissipation=d)


def dissipation_of(x: np.ndarray, kernel: Kernel, v: float | None = None) -> float:
    """D = -(1/N^2) sum_ij psi(|x_j - x_i|) |x_j - x_i|^2.

    For a constant kernel this collapses to -2cV (sum_ij |x_i - x_j|^2 equals
    2 N^2 V), an O(N) identity; the generic pairwise path costs O(N^2) and is
    only run at record times.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if kernel.kind == "constant":
        if v is None:
            dev = x - x[0]
            m1 = x[0] + dev.sum(axis=0) / n
            cen = x - m1
            v = float(np.einsum("ij,ij->", cen, cen)) / n
        return -2.0 * kernel.coef[0] * v
    diff = x[None, :, :] - x[:, None, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    wts = kernel.eval_squared(d2)
    return -float(np.einsum("ij,ij->", wts, d2)) / (n * n)


class JumpPrediction(NamedTuple):
    dm1: np.ndarray
    dm2: float
    dv: float


def predict_jumps(record_minus: MomentRecord, x_new, k: int, n0: int) -> JumpPrediction:
    """Closed-form jumps of (m1, m2, V) when arrival k joins.

    ``record_minus`` holds the moments just before the k-th arrival (so its
    population is n0 + k - 1); ``x_new`` is the arriving opinion.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"arrival index k must be an integer >= 1, got {k!r}")
    if not isinstance(n0, int) or isinstance(n0, bool) or n0 < 1:
        raise ValueError(f"n0 must be an integer >= 1, got {n0!r}")
    if record_minus.n != n0 + k - 1:
        raise ValueError(
            f"record population {record_minus.n} does not match n0 + k - 1 = {n0 + k - 1}"
        )
    x_new = np.asarray(x_new, dtype=float)
    m1m = np.asarray(record_minus.m1, dtype=float)
    if x_new.shape != m1m.shape:
        raise ValueError(f"x_new shape {x_new.shape} does not match mean shape {m1m.shape}")

    npop = n0 + k  # population after the arrival
    dm1 = (x_new - m1m) / npop
    dm2 = (float(x_new @ x_new) - record_minus.m2) / npop
    m1p = m1m + dm1
    dv = (
        float((x_new - m1p) @ (x_new - m1p)) / npop
        + (npop - 1) * float((x_new - m1m) @ (x_new - m1m)) / npop**3
        - record_minus.v / npop
    )
    return JumpPrediction(dm1=dm1, dm2=dm2, dv=dv)


def m1_closed_form(x0, xs) -> np.ndarray:
    """Mean after k arrivals: (sum of initial opinions + sum of arrivals) / (n0 + k).

    The flow never moves the mean, so this is exact at any time at or after
    the k-th arrival (and before the next).
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    n0 = x0.shape[0]
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return x0.sum(axis=0) / n0
    xs = np.atleast_2d(xs)
    if xs.shape[1] != x0.shape[1]:
        raise ValueError("initial opinions and arrivals disagree on dimension")
    k = xs.shape[0]
    return (x0.sum(axis=0) + xs.sum(axis=0)) / (n0 + k)


class MeanDeviationExpectation(NamedTuple):
    e_dev: float     # E |m1 - m|^2 after k arrivals
    e_norm2: float   # E |m1|^2 after k arrivals
    a_const: float   # |sum (x0_j - m)|^2
    b_const: float   # |sum x0_j|^2
    c_const: float   # (sum x0_j) . m


def expected_m1_deviation(n0: int, k: int, x0, m, sigma2: float) -> MeanDeviationExpectation:
    """Exact expectations of |m1 - m|^2 and |m1|^2 over the arrival draws.

    Arrivals are i.i.d. with mean m and E|X - m|^2 = sigma2; the initial
    opinions x0 are deterministic. Valid for every k >= 0.
    """
    if not isinstance(n0, int) or isinstance(n0, bool) or n0 < 1:
        raise ValueError(f"n0 must be an integer >= 1, got {n0!r}")
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise ValueError(f"arrival count k must be an integer >= 0, got {k!r}")
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    if x0.shape[0] != n0:
        raise ValueError(f"x0 has {x0.shape[0]} rows, expected n0 = {n0}")
    m = np.atleast_1d(np.asarray(m, dtype=float))
    if m.shape != (x0.shape[1],):
        raise ValueError(f"m shape {m.shape} does not match opinion dimension {x0.shape[1]}")
    sigma2 = float(sigma2)
    if sigma2 < 0.0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")

    s0 = x0.sum(axis=0)
    a_const = float((s0 - n0 * m) @ (s0 - n0 * m))
    b_const = float(s0 @ s0)
    c_const = float(s0 @ m)
    denom = float(n0 + k) ** 2
    e_dev = (a_const + k * sigma2) / denom
    e_norm2 = (b_const + k * sigma2 + 2.0 * k * c_const + k * k * float(m @ m)) / denom
    return MeanDeviationExpectation(e_dev, e_norm2, a_const, b_const, c_const)


def variance_jump_coefficient(k: int, n0: int) -> float:
    """c_k = (k + 2 n0)(k - 1) / (n0 + k)^2, the variance-jump weight.

    E[V jump at arrival k] = (c_k sigma2 - E V-) / (n0 + k) + O(1/(n0+k)^2);
    c_1 = 0 and c_k increases to 1.
    """
    if k < 1:
        raise ValueError(f"arrival index k must be >= 1, got {k}")
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    return (k + 2.0 * n0) * (k - 1.0) / float(n0 + k) ** 2

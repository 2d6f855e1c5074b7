"""Monte Carlo checks of truncated moment inequalities and path regularity.

The objects here live on a finite surrogate space R^q: elementary
integrands are step processes in time whose value on each subinterval is a
scalar multiple of the identity, with the scalar drawn from one of three
families (a constant, a bounded functional of the driving Wiener path, or
a time-zero mark exp(G^2), which does not even have a finite mean).  The
point of the third family is that the truncated inequalities stay
informative where classical second-moment bounds are vacuous, so the
checks assert finiteness and cross-seed stability of the truncated
ratios, never a specific constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InsufficientDataError, StatisticalAlarm
from .rng import L0_MARK_TAG, L0_WIENER_TAG, keyed_generator

FAMILIES = ("deterministic_const", "wiener_functional", "heavy_tailed_scale")


@dataclass(frozen=True)
class ElementaryIntegrand:
    """Step-process integrand on the partition, valued in scalar * identity.

    ``support`` optionally restricts the integrand to the subintervals
    contained in a window, which is how disjoint-block sequences for the
    summed inequality are built.  The scalar for a subinterval (t_n, t_{n+1}]
    depends only on information available at t_n.
    """

    dim_q: int
    partition: np.ndarray
    family: str
    scale: float = 1.0
    support: tuple[float, float] | None = None

    def __post_init__(self):
        part = np.asarray(self.partition, dtype=float)
        if part.ndim != 1 or part.size < 2:
            raise DomainError("partition needs at least two time points")
        if part[0] != 0.0 or part[-1] != 1.0 or np.any(np.diff(part) <= 0.0):
            raise DomainError("partition must increase from 0 to 1")
        if self.family not in FAMILIES:
            raise DomainError(f"unknown integrand family {self.family!r}")
        if self.dim_q < 1:
            raise DomainError(f"dim_q must be >= 1, got {self.dim_q}")
        object.__setattr__(self, "partition", part)

    def step_mask(self) -> np.ndarray:
        """Boolean mask of subintervals inside the support window."""
        if self.support is None:
            return np.ones(self.partition.size - 1, dtype=bool)
        lo, hi = self.support
        mids = 0.5 * (self.partition[:-1] + self.partition[1:])
        return (mids > lo) & (mids < hi)

    def step_scalars(self, w_left: np.ndarray, marks: np.ndarray) -> np.ndarray:
        """Scalar multiplier per (path, subinterval).

        ``w_left`` holds the first Wiener coordinate at the left endpoints,
        ``marks`` the per-path time-zero standard normals.
        """
        n_paths, n_steps = w_left.shape
        if self.family == "deterministic_const":
            vals = np.full((n_paths, n_steps), self.scale)
        elif self.family == "wiener_functional":
            vals = self.scale * np.cos(w_left)
        else:  # heavy_tailed_scale: exp(G^2) is not square integrable
            vals = self.scale * np.exp(marks**2)[:, None] * np.ones(n_steps)
        return vals * self.step_mask()


@dataclass(frozen=True)
class IntegralSample:
    """Monte Carlo batch of one elementary stochastic integral."""

    values: np.ndarray  # (n_paths, n_points, q) integral at partition points
    sup_norm: np.ndarray  # (n_paths,) max euclidean norm over partition points
    quad_var: np.ndarray  # (n_paths,) integral of the squared HS norm


def _draw_increments(phi: ElementaryIntegrand, seed: int, n_paths: int):
    dts = np.diff(phi.partition)
    gen = keyed_generator(seed, L0_WIENER_TAG)
    dw = gen.standard_normal((n_paths, dts.size, phi.dim_q)) * np.sqrt(dts)[:, None]
    marks = keyed_generator(seed, L0_MARK_TAG).standard_normal(n_paths)
    return dw, marks


def _integrate(phi: ElementaryIntegrand, dw: np.ndarray, marks: np.ndarray):
    dts = np.diff(phi.partition)
    w = np.cumsum(dw, axis=1)
    w_left = np.concatenate(
        [np.zeros((dw.shape[0], 1)), w[:, :-1, 0]], axis=1
    )  # first coordinate at left endpoints
    scalars = phi.step_scalars(w_left, marks)
    incr = scalars[:, :, None] * dw
    x = np.concatenate(
        [np.zeros((dw.shape[0], 1, phi.dim_q)), np.cumsum(incr, axis=1)], axis=1
    )
    sup = np.linalg.norm(x, axis=2).max(axis=1)
    quad_var = ((scalars**2) * phi.dim_q) @ dts
    return IntegralSample(values=x, sup_norm=sup, quad_var=quad_var)


def ito_integral_elementary(
    phi: ElementaryIntegrand, seed: int, n_paths: int = 1
) -> IntegralSample:
    """Evaluate the defining sum of the integral at all partition points."""
    dw, marks = _draw_increments(phi, seed, n_paths)
    return _integrate(phi, dw, marks)


def dp_metric(samples: np.ndarray, p: float) -> float:
    """Truncated moment metric estimate: (mean of min(1, s^p))^(1/p)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InsufficientDataError("dp_metric needs at least one sample")
    if p < 1.0:
        raise DomainError(f"p must be >= 1, got {p}")
    if np.any(samples < 0.0):
        raise DomainError("distance samples must be nonnegative")
    return float(np.mean(np.minimum(1.0, samples**p)) ** (1.0 / p))


def _ratio(lhs: float, rhs: float) -> float:
    # 0/0 convention: both sides vanish for the zero integrand
    if lhs == 0.0 and rhs == 0.0:
        return 0.0
    if rhs == 0.0:
        raise ZeroDivisionError
    return lhs / rhs


def bdg_ratio(
    phi: ElementaryIntegrand, p: float, n_paths: int, seed: int = 0
) -> float:
    """Truncated-supremum to truncated-quadratic-variation ratio.

    Estimates E[1 ^ sup_t |X(t)|^p] / E[1 ^ quad_var]^{p/2}; the inequality
    under test asserts this is bounded by a constant depending only on p.  A
    zero denominator with positive numerator is a violation candidate and
    triggers one automatic rerun at 10x the paths before raising an alarm.
    """
    if p <= 0.0:
        raise DomainError(f"p must be positive, got {p}")
    if n_paths < 1000:
        raise DomainError(f"need at least 1000 paths, got {n_paths}")
    for attempt_paths in (n_paths, 10 * n_paths):
        sample = ito_integral_elementary(phi, seed, attempt_paths)
        lhs = float(np.mean(np.minimum(1.0, sample.sup_norm**p)))
        rhs = float(np.mean(np.minimum(1.0, sample.quad_var)) ** (p / 2.0))
        try:
            return _ratio(lhs, rhs)
        except ZeroDivisionError:
            continue
    raise StatisticalAlarm(
        f"bdg_ratio degenerate at {10 * n_paths} paths: lhs > 0 with rhs = 0"
    )


def bdg_sum_ratio(
    phis: list[ElementaryIntegrand], p: float, n_paths: int, seed: int = 0
) -> float:
    """Ratio for the summed inequality over a finite integrand sequence.

    All integrands are driven by the same Wiener paths; the truncation sits
    outside the sums on both sides, and the denominator carries the
    (integral)^{p/2} structure per sequence member.
    """
    if p < 2.0:
        raise DomainError(f"summed inequality requires p >= 2, got {p}")
    if not phis:
        raise DomainError("empty integrand list")
    base = phis[0]
    for phi in phis[1:]:
        if phi.dim_q != base.dim_q or not np.array_equal(
            phi.partition, base.partition
        ):
            raise DomainError("integrands must share dimension and partition")
    for attempt_paths in (n_paths, 10 * n_paths):
        dw, marks = _draw_increments(base, seed, attempt_paths)
        sup_sum = np.zeros(attempt_paths)
        qv_sum = np.zeros(attempt_paths)
        for phi in phis:
            sample = _integrate(phi, dw, marks)
            sup_sum += sample.sup_norm**p
            qv_sum += sample.quad_var ** (p / 2.0)
        lhs = float(np.mean(np.minimum(1.0, sup_sum)))
        rhs = float(np.mean(np.minimum(1.0, qv_sum)))
        try:
            return _ratio(lhs, rhs)
        except ZeroDivisionError:
            continue
    raise StatisticalAlarm(
        f"bdg_sum_ratio degenerate at {10 * n_paths} paths: lhs > 0 with rhs = 0"
    )


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    degenerate: bool
    levels: np.ndarray  # dyadic levels m used
    increments: np.ndarray  # S(m) = max increment norm at level m


def holder_exponent(snapshots, m_min: int, norm=None) -> HolderEstimate:
    """Empirical Hölder exponent from dyadic increment maxima.

    ``snapshots`` holds the path at all times j * 2**-m_max (so
    2**m_max + 1 entries, scalars or vectors).  For each m from m_min to
    m_max the statistic S(m) is the maximum norm of the level-m dyadic
    increments; the exponent is the negated least-squares slope of
    log2 S(m) against m.  A level with S(m) = 0 marks the path as
    degenerate (e.g. constant in time) and no slope is fitted.
    """
    snapshots = np.asarray(snapshots, dtype=float)
    n_pts = snapshots.shape[0]
    m_max = int(math.log2(n_pts - 1)) if n_pts > 1 else 0
    if n_pts != 2**m_max + 1:
        raise DomainError(
            f"snapshot count {n_pts} is not 2^m + 1 for integer m"
        )
    if m_min < 0 or m_max - m_min + 1 < 4:
        raise InsufficientDataError(
            f"need >= 4 dyadic levels, got m in [{m_min}, {m_max}]"
        )
    ms = np.arange(m_min, m_max + 1)
    incs = np.empty(ms.size)
    for i, m in enumerate(ms):
        stride = 2 ** (m_max - m)
        pts = snapshots[::stride]
        diffs = np.diff(pts, axis=0)
        if norm is not None:
            norms = np.array([norm(d) for d in diffs])
        elif diffs.ndim == 1:
            norms = np.abs(diffs)
        else:
            norms = np.linalg.norm(diffs, axis=1)
        incs[i] = norms.max()
    if np.any(incs == 0.0):
        return HolderEstimate(
            exponent=float("nan"), degenerate=True, levels=ms, increments=incs
        )
    slope, _ = np.polyfit(ms, np.log2(incs), 1)
    return HolderEstimate(
        exponent=float(-slope), degenerate=False, levels=ms, increments=incs
    )


def brownian_path(seed: int, m_max: int) -> np.ndarray:
    """Scalar Brownian path on the dyadic grid of level m_max (control case)."""
    n = 2**m_max
    steps = keyed_generator(seed, L0_WIENER_TAG).standard_normal(n) / math.sqrt(n)
    return np.concatenate([[0.0], np.cumsum(steps)])


def block_integrands(
    family: str,
    n_blocks: int,
    steps_per_block: int,
    dim_q: int = 1,
    scale: float = 1.0,
) -> list[ElementaryIntegrand]:
    """Sequence of identical integrands supported on disjoint time blocks."""
    if n_blocks < 1:
        raise DomainError(f"n_blocks must be >= 1, got {n_blocks}")
    partition = np.linspace(0.0, 1.0, n_blocks * steps_per_block + 1)
    out = []
    for i in range(n_blocks):
        out.append(
            ElementaryIntegrand(
                dim_q=dim_q,
                partition=partition,
                family=family,
                scale=scale,
                support=(i / n_blocks, (i + 1) / n_blocks),
            )
        )
    return out

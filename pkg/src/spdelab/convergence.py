"""Coupled coarse-vs-reference error studies and rate extraction.

A study fixes a reference resolution, simulates each path once at the
reference and once per coarse level on the *same* driving noise (via time
aggregation and spatial restriction of the increments), and measures the
relative error at t = 1 in the reference mass norm.  Rates are least-squares
slopes in log2-log2 coordinates of the mean error against the resolution.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .driver import sample_driver
from .exceptions import (
    DegenerateReferenceError,
    DomainError,
    InsufficientDataError,
)
from .fracpow import make_spec
from .mesh import SOLVER_TOL, assemble, build_mesh, restriction_matrix
from .noise import NoiseStream
from .stepper import SchemeConfig, evolve_fast

#: Mean errors below this are attributed to solver tolerance, not discretization.
SATURATION_FLOOR = 10.0 * SOLVER_TOL

#: Hölder exponent available to the scalar driver approximation (any beta < 1).
DEFAULT_BETA = 1.0


def relative_error(
    alpha_coarse: np.ndarray,
    alpha_ref: np.ndarray,
    a: sp.spmatrix | None,
    m_ref: sp.spmatrix,
) -> float:
    """Relative pathwise error of a coarse run against the reference run.

    The coarse coefficients are prolonged to the reference mesh with the
    transpose of the restriction matrix; the quotient is measured in the
    reference mass norm.  ``a = None`` means both runs share the mesh.
    """
    diff = (alpha_coarse if a is None else a.T @ alpha_coarse) - alpha_ref
    denom = float(alpha_ref @ (m_ref @ alpha_ref))
    if denom <= 0.0:
        raise DegenerateReferenceError("reference solution has zero mass norm")
    return float(math.sqrt(float(diff @ (m_ref @ diff)) / denom))


def theoretical_rates(
    gamma: float, dim: int, beta: float = DEFAULT_BETA
) -> tuple[float, float]:
    """Theoretical (space, time) convergence rates for the scheme.

    The spatial rate is the supremum of admissible error exponents,
    min(2, 2 gamma + 1 - dim/2); the temporal rate is half of that, capped
    by the temporal regularity ``beta`` of the scalar driver.
    """
    if dim not in (1, 2):
        raise DomainError(f"dim must be 1 or 2, got {dim}")
    if not gamma > dim / 4.0 - 0.5:
        raise DomainError(f"gamma {gamma} not admissible for dim {dim}")
    space_rate = min(2.0, 2.0 * gamma + 1.0 - dim / 2.0)
    time_rate = min(space_rate / 2.0, beta)
    return space_rate, time_rate


def fit_rate(points: list[tuple[float, float]]) -> float:
    """Least-squares slope of log2(error) against log2(resolution)."""
    if len(points) < 3:
        raise InsufficientDataError(f"rate fit needs >= 3 points, got {len(points)}")
    res = np.array([p[0] for p in points], dtype=float)
    err = np.array([p[1] for p in points], dtype=float)
    if np.any(res <= 0.0) or np.any(err <= 0.0):
        raise DomainError("rate fit needs positive resolutions and errors")
    slope, _ = np.polyfit(np.log2(res), np.log2(err), 1)
    return float(slope)


@dataclass(frozen=True)
class StudyPlan:
    """Picklable description of one convergence study."""

    axis: str  # "space" or "time"
    dim: int
    gamma: float
    k: float
    n_modes: int
    ref_space_level: int
    ref_time_steps: int
    # the driving noise is generated at this time resolution and aggregated
    # down to every run, so refining the reference keeps the same Wiener path
    noise_steps: int
    # one (space_level, time_steps, resolution, label) per coarse run
    coarse: tuple[tuple[int, int, float, int], ...]


@dataclass(frozen=True)
class LevelResult:
    level: int
    resolution: float
    errors: tuple[float, ...]  # one per path, in seed order
    mean_error: float
    saturated: bool


@dataclass(frozen=True)
class ConvergenceReport:
    axis: str
    dim: int
    gamma: float
    levels: tuple[LevelResult, ...]
    fitted_rate: float | None
    theoretical_rate: float
    n_paths: int
    seeds: tuple[int, ...]

    def error_rows(self) -> list[tuple]:
        """(axis, gamma, resolution, path_seed, error) per run, fit input order."""
        rows = []
        for lv in self.levels:
            for seed, err in zip(self.seeds, lv.errors):
                rows.append((self.axis, self.gamma, lv.resolution, seed, err))
        return rows

    def summary_row(self) -> tuple:
        fitted = "" if self.fitted_rate is None else self.fitted_rate
        return (
            self.axis,
            self.dim,
            self.gamma,
            fitted,
            self.theoretical_rate,
            self.n_paths,
            len(self.levels),
        )


def plan_study(
    base: SchemeConfig,
    axis: str,
    coarse_levels: list[int],
    ref_level: int,
    noise_steps: int | None = None,
) -> StudyPlan:
    """Resolve a study request into explicit per-run resolutions.

    For ``axis="space"`` the coarse entries are mesh levels sharing the time
    grid of ``base``; ``ref_level`` is the reference mesh level.  For
    ``axis="time"`` the coarse entries and ``ref_level`` are dyadic time
    exponents (time step 2**-level) at the fixed mesh level of ``base``.
    ``noise_steps`` fixes the time resolution of the driving noise
    independently of the reference (default: the reference's own grid).
    """
    if axis not in ("space", "time"):
        raise DomainError(f"axis must be 'space' or 'time', got {axis!r}")
    if not coarse_levels:
        raise DomainError("no coarse levels given")
    if any(lv > ref_level for lv in coarse_levels):
        raise DomainError("coarse levels must not exceed the reference level")
    if sorted(coarse_levels) != list(coarse_levels):
        raise DomainError("coarse levels must be ordered coarse to fine")

    if axis == "space":
        ref_space, ref_steps = ref_level, base.time_steps
        coarse = tuple(
            (lv, base.time_steps, build_mesh(base.dim, lv).h, lv)
            for lv in coarse_levels
        )
    else:
        ref_space, ref_steps = base.space_level, 2**ref_level
        coarse = tuple(
            (base.space_level, 2**lv, 2.0**-lv, lv) for lv in coarse_levels
        )
    if noise_steps is None:
        noise_steps = ref_steps
    if noise_steps % ref_steps != 0:
        raise DomainError(
            f"noise_steps {noise_steps} must be a multiple of the reference "
            f"steps {ref_steps}"
        )
    return StudyPlan(
        axis=axis,
        dim=base.dim,
        gamma=base.gamma,
        k=base.k,
        n_modes=base.n_modes,
        ref_space_level=ref_space,
        ref_time_steps=ref_steps,
        noise_steps=noise_steps,
        coarse=coarse,
    )


# Per-process cache of assembled operators and restriction matrices, keyed by
# structural parameters; lets worker processes rebuild each level only once.
_OPS_CACHE: dict = {}


def _cached_ops(dim: int, level: int):
    key = ("ops", dim, level)
    ops = _OPS_CACHE.get(key)
    if ops is None:
        ops = assemble(build_mesh(dim, level))
        _OPS_CACHE[key] = ops
    return ops


def _cached_restriction(dim: int, coarse_level: int, fine_level: int):
    if coarse_level == fine_level:
        return None
    key = ("restr", dim, coarse_level, fine_level)
    a = _OPS_CACHE.get(key)
    if a is None:
        a = restriction_matrix(build_mesh(dim, coarse_level), build_mesh(dim, fine_level))
        _OPS_CACHE[key] = a
    return a


def path_errors(plan: StudyPlan, seed: int) -> np.ndarray:
    """Relative errors of every coarse run of one path against its reference."""
    ref_ops = _cached_ops(plan.dim, plan.ref_space_level)
    spec = make_spec(plan.gamma, plan.k)
    driver = sample_driver(seed, plan.n_modes)
    stream = NoiseStream(
        seed=seed, fine_level=plan.ref_space_level, fine_steps=plan.noise_steps
    )
    ref_cfg = SchemeConfig(
        dim=plan.dim,
        gamma=plan.gamma,
        space_level=plan.ref_space_level,
        time_steps=plan.ref_time_steps,
        master_seed=seed,
        k=plan.k,
        mode="final_time",
        n_modes=plan.n_modes,
    )
    ref = evolve_fast(ref_cfg, stream, driver, ops=ref_ops, spec=spec)

    errors = np.empty(len(plan.coarse))
    for i, (space_level, time_steps, _res, _label) in enumerate(plan.coarse):
        ops = _cached_ops(plan.dim, space_level)
        a = _cached_restriction(plan.dim, space_level, plan.ref_space_level)
        cfg = SchemeConfig(
            dim=plan.dim,
            gamma=plan.gamma,
            space_level=space_level,
            time_steps=time_steps,
            master_seed=seed,
            k=plan.k,
            mode="final_time",
            n_modes=plan.n_modes,
        )
        state = evolve_fast(
            cfg,
            stream,
            driver,
            a,
            ops=ops,
            spec=spec,
            fine_l_mass=ref_ops.mass_chol if a is not None else None,
        )
        errors[i] = relative_error(state.alpha, ref.alpha, a, ref_ops.mass)
    return errors


def convergence_study(
    base: SchemeConfig,
    axis: str,
    coarse_levels: list[int],
    ref_level: int,
    n_paths: int,
    n_workers: int = 1,
    noise_steps: int | None = None,
    beta: float = DEFAULT_BETA,
) -> ConvergenceReport:
    """Run a full coupled convergence study and fit the empirical rate.

    Path seeds are ``base.master_seed + i``; results are reduced in seed
    order, so reruns with the same master seed are bit-identical.  Levels
    whose mean error sits at the solver-tolerance floor are flagged as
    saturated and excluded from the fit.
    """
    plan = plan_study(base, axis, coarse_levels, ref_level, noise_steps)
    seeds = tuple(base.master_seed + i for i in range(n_paths))

    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            per_path = list(pool.map(path_errors, [plan] * n_paths, seeds))
    else:
        per_path = [path_errors(plan, s) for s in seeds]
    errors = np.array(per_path)  # (n_paths, n_levels)

    levels = []
    for i, (_sl, _ts, resolution, label) in enumerate(plan.coarse):
        per_level = errors[:, i]
        mean = float(per_level.mean())
        levels.append(
            LevelResult(
                level=label,
                resolution=resolution,
                errors=tuple(float(e) for e in per_level),
                mean_error=mean,
                saturated=mean < SATURATION_FLOOR,
            )
        )

    usable = [(lv.resolution, lv.mean_error) for lv in levels if not lv.saturated]
    fitted = fit_rate(usable) if len(usable) >= 3 else None

    space_rate, time_rate = theoretical_rates(base.gamma, base.dim, beta)
    return ConvergenceReport(
        axis=axis,
        dim=base.dim,
        gamma=base.gamma,
        levels=tuple(levels),
        fitted_rate=fitted,
        theoretical_rate=space_rate if axis == "space" else time_rate,
        n_paths=n_paths,
        seeds=seeds,
    )

"""Rough scalar process scaling the noise: b = exp(f^2).

``f`` is a Gaussian process given by a cosine expansion with rapidly
decaying coefficients; it is almost surely smoother than any Brownian path
(Hölder exponent arbitrarily close to 1) while ``exp(f^2)`` has no finite
second moment, which is exactly the regime the solver is exercised in.

Evaluation is pointwise spectral and therefore consistent across time
resolutions: sampling b on a fine grid and subsampling equals sampling b on
the coarse grid directly, with zero discrepancy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .rng import DRIVER_TAG, keyed_normals

DEFAULT_N_MODES = 1000


@dataclass(frozen=True)
class ScalarDriver:
    """Truncated spectral representation of one trajectory of f."""

    seed: int
    n_modes: int
    coeffs: np.ndarray  # xi_0 .. xi_{n_modes}, iid standard normal

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "n_modes": self.n_modes,
                "coeffs": self.coeffs.tolist(),
            }
        )


def sample_driver(seed: int, n_modes: int = DEFAULT_N_MODES) -> ScalarDriver:
    """Draw the spectral coefficients for one trajectory.

    Deterministic in ``seed`` and prefix-stable in ``n_modes``: asking for
    more modes extends the coefficient vector without changing the earlier
    entries.  The key domain is disjoint from the Wiener noise streams.
    """
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}")
    coeffs = keyed_normals(seed, DRIVER_TAG, 0, n_modes + 1)
    return ScalarDriver(seed=seed, n_modes=n_modes, coeffs=coeffs)


def _check_time(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")


def eval_f(driver: ScalarDriver, t: float) -> float:
    """Evaluate f(t) = xi_0 + sum_n (1 + pi^2 n^2)^-1 xi_n sqrt(2) cos(pi n t)."""
    _check_time(t)
    n = np.arange(1, driver.n_modes + 1)
    modes = math.sqrt(2.0) * np.cos(math.pi * n * t) / (1.0 + math.pi**2 * n**2)
    return float(driver.coeffs[0] + driver.coeffs[1:] @ modes)


def eval_f_grid(driver: ScalarDriver, times: np.ndarray) -> np.ndarray:
    """Vectorized ``eval_f`` over a time grid in [0, 1]."""
    times = np.asarray(times, dtype=float)
    if times.size and (times.min() < 0.0 or times.max() > 1.0):
        raise DomainError("times must lie in [0, 1]")
    n = np.arange(1, driver.n_modes + 1)
    weights = math.sqrt(2.0) / (1.0 + math.pi**2 * n**2)
    basis = np.cos(math.pi * np.outer(times, n)) * weights
    return driver.coeffs[0] + basis @ driver.coeffs[1:]


def eval_b(driver: ScalarDriver, t: float) -> float:
    """Evaluate b(t) = exp(f(t)^2); always >= 1."""
    return math.exp(eval_f(driver, t) ** 2)


def eval_b_grid(driver: ScalarDriver, times: np.ndarray) -> np.ndarray:
    return np.exp(eval_f_grid(driver, times) ** 2)


def truncation_tail_bound(n_modes: int) -> float:
    """Upper bound on the sup-norm of the omitted expansion tail."""
    return math.sqrt(2.0) / (math.pi**2 * n_modes)

"""Discrete PMFs over intervention counts and their convolution algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASS_TOL = 1e-9


@dataclass
class TaskloadPmf:
    """Probability mass over counts n = 0, 1, 2, ...

    truncation_mass is the residual probability beyond the last index,
    so sum(probs) + truncation_mass = 1 within 1e-9. horizon records the
    time window (minutes) the counts refer to; None for window-free PMFs
    such as occupancy snapshots.
    """

    probs: np.ndarray
    truncation_mass: float = 0.0
    horizon: float | None = None

    def __post_init__(self):
        self.probs = np.atleast_1d(np.asarray(self.probs, dtype=float))
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(self.probs < -_MASS_TOL):
            raise ValueError(f"negative probability {self.probs.min()}")
        self.probs = np.clip(self.probs, 0.0, None)
        if self.truncation_mass < -_MASS_TOL:
            raise ValueError(f"negative truncation mass {self.truncation_mass}")
        self.truncation_mass = max(0.0, float(self.truncation_mass))
        total = self.probs.sum() + self.truncation_mass
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"PMF mass {total} is not 1")

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.probs.size)

    def mean(self) -> float:
        return float(self.support @ self.probs)

    def p_geq(self, n: int) -> float:
        """P[N >= n], counting truncated mass as >= any index."""
        if n <= 0:
            return float(self.probs.sum() + self.truncation_mass)
        return float(self.probs[n:].sum() + self.truncation_mass)

    def mode(self) -> int:
        return int(np.argmax(self.probs))

    def trimmed(self, eps: float = 1e-15) -> "TaskloadPmf":
        """Drop a negligible right tail into truncation_mass."""
        keep = self.probs.size
        tail = 0.0
        while keep > 1 and tail + self.probs[keep - 1] < eps:
            tail += self.probs[keep - 1]
            keep -= 1
        return TaskloadPmf(self.probs[:keep].copy(),
                           self.truncation_mass + tail, self.horizon)

    def padded(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[:min(size, self.probs.size)] = self.probs[:size]
        return out


def delta_pmf(n: int = 0, horizon: float | None = None) -> TaskloadPmf:
    """Point mass at count n."""
    probs = np.zeros(n + 1)
    probs[n] = 1.0
    return TaskloadPmf(probs, 0.0, horizon)


def _check_horizons(p: TaskloadPmf, q: TaskloadPmf) -> float | None:
    if p.horizon is None or q.horizon is None:
        return p.horizon if p.horizon is not None else q.horizon
    if not math.isclose(p.horizon, q.horizon, rel_tol=1e-12, abs_tol=1e-9):
        raise ValueError(f"horizon mismatch: {p.horizon} vs {q.horizon}")
    return p.horizon


def convolve_pmf(p: TaskloadPmf, q: TaskloadPmf) -> TaskloadPmf:
    """PMF of the sum of two independent counts."""
    horizon = _check_horizons(p, q)
    probs = np.convolve(p.probs, q.probs)
    # mass lost through the inputs' truncations stays truncated
    trunc = max(0.0, 1.0 - probs.sum())
    return TaskloadPmf(probs, trunc, horizon)


def autoconvolve_pmf(p: TaskloadPmf, order: int) -> TaskloadPmf:
    """order successive self-convolutions: order 0 returns p itself,
    order k the PMF of the sum of k+1 independent copies."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    out = p
    for _ in range(order):
        out = convolve_pmf(out, p)
    return out


def tv_distance(p: TaskloadPmf, q: TaskloadPmf) -> float:
    """Total variation: half the L1 distance including truncated mass."""
    size = max(p.probs.size, q.probs.size)
    diff = np.abs(p.padded(size) - q.padded(size)).sum()
    diff += abs(p.truncation_mass - q.truncation_mass)
    return 0.5 * float(diff)


def wilson_interval(k, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion, vectorized."""
    if n <= 0:
        raise ValueError("n must be positive")
    k = np.asarray(k, dtype=float)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    lo = np.where(k == 0, 0.0, np.clip(center - half, 0.0, 1.0))
    hi = np.where(k == n, 1.0, np.clip(center + half, 0.0, 1.0))
    return lo, hi

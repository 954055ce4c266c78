"""Estimate OU parameters from uniformly sampled deviation series.

Both estimators work through the affine one-step recursion

    X_{i+1} = a X_i + b + eps,   eps ~ Normal(0, sigma_eps^2) i.i.d.,

with a = e^{-kappa dt}, b = mu (1 - a) and sigma_eps the conditional
step noise. Least squares regresses X_{i+1} on X_i; maximum likelihood
does coordinate ascent on the exact conditional Gaussian log-likelihood.
Because the ML optimum in (a, b) *is* the OLS solution and both use the
1/n noise normalization, the two agree to numerical precision on any
non-degenerate series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import MomentSet
from .ou import OuParams

FLAG_NO_MEAN_MEMORY = "no_mean_memory"          # a_hat <= 0, kappa undefined
FLAG_NON_MEAN_REVERTING = "non_mean_reverting"  # a_hat >= 1
FLAG_NO_CONVERGENCE = "no_convergence"
FLAG_ZERO_NOISE = "zero_noise"


class DegenerateDataError(ValueError):
    """Raised when a series carries no usable variation."""


@dataclass
class TimeSeries:
    """Uniformly sampled deviation observations X_0 ... X_n."""

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size < 3:
            raise ValueError(f"need at least 3 observations, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite observation")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


@dataclass
class CalibrationReport:
    """Fitted parameters plus the regression intermediates and diagnostics.

    kappa/sigma are NaN inside params when flagged undefined (a_hat <= 0
    leaves no real mean-reversion rate; we report that instead of
    clamping, since a clamped rate fabricates dynamics).
    """

    params: OuParams | None
    a_hat: float
    b_hat: float
    sigma_eps_hat: float
    loglik: float
    stationary_sd: float
    n_transitions: int
    dt: float
    method: str
    flags: list[str] = field(default_factory=list)


def _loglik(x: np.ndarray, a: float, b: float, sig_eps: float) -> float:
    """Conditional Gaussian log-likelihood of the recursion residuals."""
    n = x.size - 1
    if sig_eps <= 0.0:
        return math.inf if np.allclose(x[1:], a * x[:-1] + b) else -math.inf
    resid = x[1:] - a * x[:-1] - b
    return (-0.5 * n * math.log(2.0 * math.pi) - n * math.log(sig_eps)
            - 0.5 * float(resid @ resid) / sig_eps ** 2)


def _params_from_recursion(a: float, b: float, sig_eps: float, dt: float,
                           flags: list[str]) -> tuple[OuParams | None, float]:
    """Map (a, b, sigma_eps) to (kappa, mu, sigma) and the stationary sd."""
    stationary_sd = (sig_eps / math.sqrt(1.0 - a * a)
                     if abs(a) < 1.0 else math.nan)
    if a <= 0.0:
        flags.append(FLAG_NO_MEAN_MEMORY)
        return None, stationary_sd
    if a >= 1.0:
        flags.append(FLAG_NON_MEAN_REVERTING)
        return None, stationary_sd
    kappa = -math.log(a) / dt
    mu = b / (1.0 - a)
    sigma = sig_eps * math.sqrt(-2.0 * math.log(a) / (dt * (1.0 - a * a)))
    return OuParams(kappa=kappa, mu=mu, sigma=sigma), stationary_sd


def fit_least_squares(ts: TimeSeries) -> CalibrationReport:
    """Ordinary least squares on the one-step recursion."""
    x = ts.values
    x0, x1 = x[:-1], x[1:]
    n = x0.size
    mx0 = x0.mean()
    mx1 = x1.mean()
    sxx = float((x0 - mx0) @ (x0 - mx0))
    if sxx == 0.0:
        raise DegenerateDataError("predictor values have zero variance")
    a = float((x0 - mx0) @ (x1 - mx1)) / sxx
    b = mx1 - a * mx0
    resid = x1 - a * x0 - b
    sig_eps = math.sqrt(float(resid @ resid) / n)  # 1/n normalization
    flags: list[str] = []
    if sig_eps == 0.0:
        flags.append(FLAG_ZERO_NOISE)
    params, stat_sd = _params_from_recursion(a, b, sig_eps, ts.dt, flags)
    if params is not None and sig_eps == 0.0:
        params = OuParams(kappa=params.kappa, mu=params.mu, sigma=0.0)
    return CalibrationReport(params=params, a_hat=a, b_hat=b,
                             sigma_eps_hat=sig_eps,
                             loglik=_loglik(x, a, b, sig_eps),
                             stationary_sd=stat_sd, n_transitions=n,
                             dt=ts.dt, method="least_squares", flags=flags)


def fit_mle(ts: TimeSeries, max_iter: int = 100,
            rel_tol: float = 1e-10) -> CalibrationReport:
    """Conditional maximum likelihood via alternating stationarity updates.

    Given mu, the optimal slope is the regression through mu:
    a = sum (X_{i+1}-mu)(X_i-mu) / sum (X_i-mu)^2; given a, the optimal
    mu is sum(X_{i+1} - a X_i) / (n (1-a)). Each step solves one
    coordinate exactly, so the iteration climbs the likelihood to the
    shared LS/ML optimum. Starts from the LS estimate.
    """
    ls = fit_least_squares(ts)
    x = ts.values
    x0, x1 = x[:-1], x[1:]
    n = x0.size
    a, b = ls.a_hat, ls.b_hat
    mu = b / (1.0 - a) if a != 1.0 else x.mean()
    flags: list[str] = []
    converged = False
    for _ in range(max_iter):
        d0 = x0 - mu
        denom = float(d0 @ d0)
        if denom == 0.0:
            raise DegenerateDataError("predictor values have zero variance")
        a_new = float((x1 - mu) @ d0) / denom
        if abs(a_new) >= 1.0 or a_new == 0.0:
            # outside the invertible range; keep the raw update and let
            # the parameter mapping flag it
            mu_new = (float(np.sum(x1 - a_new * x0)) / (n * (1.0 - a_new))
                      if a_new != 1.0 else mu)
        else:
            mu_new = float(np.sum(x1 - a_new * x0)) / (n * (1.0 - a_new))
        step = max(abs(a_new - a), abs(mu_new - mu) / max(1.0, abs(mu_new)))
        a, mu = a_new, mu_new
        if step <= rel_tol:
            converged = True
            break
    if not converged:
        flags.append(FLAG_NO_CONVERGENCE)
    b = mu * (1.0 - a)
    resid = x1 - a * x0 - b
    sig_eps = math.sqrt(float(resid @ resid) / n)  # same 1/n as LS
    if sig_eps == 0.0:
        flags.append(FLAG_ZERO_NOISE)
    params, stat_sd = _params_from_recursion(a, b, sig_eps, ts.dt, flags)
    if params is not None and sig_eps == 0.0:
        params = OuParams(kappa=params.kappa, mu=params.mu, sigma=0.0)
    return CalibrationReport(params=params, a_hat=a, b_hat=b,
                             sigma_eps_hat=sig_eps,
                             loglik=_loglik(x, a, b, sig_eps),
                             stationary_sd=stat_sd, n_transitions=n,
                             dt=ts.dt, method="mle", flags=flags)


def sample_moments(ts: TimeSeries) -> MomentSet:
    """Empirical mean, unbiased variance, and standardized beta1/beta2.

    Raises DegenerateDataError for a constant series (the shape ratios
    are undefined at zero variance).
    """
    x = ts.values
    if x.size < 4:
        raise ValueError("need at least 4 observations for four moments")
    mean = float(x.mean())
    d = x - mean
    var = float(d @ d) / (x.size - 1)
    if var == 0.0:
        raise DegenerateDataError("constant series: moments beyond the mean undefined")
    m2 = float(np.mean(d * d))
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    return MomentSet(mu1=mean, mu2=var, beta1=m3 ** 2 / m2 ** 3, beta2=m4 / m2 ** 2)

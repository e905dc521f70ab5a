"""Conjugate continuous-state families.

Two specializations in which the unknown mean flow payoff mu of the risky arm
has a continuous conjugate prior, so the posterior is summarized by two
numbers:

* Brownian payoffs, normal prior.  Sufficient statistic (m, tau) = posterior
  mean and precision.  With z = (s - m) sqrt(tau),

      f = s Phi(z) + m (1 - Phi(z)) + phi(z) / sqrt(tau),
      I = F(z) = Phi(z) - 1 + phi(z) / z          (for m < s),

  and F is a strictly decreasing bijection from (0, inf) onto itself with
  F'(z) = -phi(z) / z^2.

* Poisson payoffs (unit lumps), gamma prior.  Sufficient statistic
  (alpha, beta) = shape and rate; posterior mean m = alpha / beta.  With
  G(x; a, b) the gamma CDF,

      f = s G(s; alpha, beta) + m (1 - G(s; alpha+1, beta)),
      I = [s G(s; alpha, beta) - m G(s; alpha+1, beta)] / (s - m) - 1,

  an arrival updates (alpha, beta) -> (alpha+1, beta), and operational time
  accrues onto beta.

The equilibrium allocation is the same map of the incentive as in the
discrete-state case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, ndtr

from .equilibrium import action_from_incentive

SQRT_2PI = np.sqrt(2.0 * np.pi)


def _phi(z):
    return np.exp(-0.5 * np.square(z)) / SQRT_2PI


@dataclass(frozen=True)
class NormalStat:
    """Normal posterior over the risky mean: mean and precision."""

    mean: float
    precision: float

    def __post_init__(self):
        if not (np.isfinite(self.precision) and self.precision > 0.0):
            raise ValueError("precision must be strictly positive")
        if not np.isfinite(self.mean):
            raise ValueError("mean must be finite")

    @property
    def variance(self) -> float:
        return 1.0 / self.precision


@dataclass(frozen=True)
class GammaStat:
    """Gamma posterior over the risky arrival intensity: shape and rate."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.shape) and self.shape > 0.0):
            raise ValueError("shape must be strictly positive")
        if not (np.isfinite(self.rate) and self.rate > 0.0):
            raise ValueError("rate must be strictly positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2

    @classmethod
    def from_mean_variance(cls, mean: float, variance: float) -> "GammaStat":
        shape = mean * mean / variance
        return cls(shape=shape, rate=shape / mean)


# ---------------------------------------------------------------------------
# Brownian payoffs, normal prior
# ---------------------------------------------------------------------------

def incentive_shape(z):
    """F(z) = Phi(z) - 1 + phi(z)/z on z > 0 (incentive at z = (s-m) sqrt(tau))."""
    z = np.asarray(z, dtype=float)
    return ndtr(z) - 1.0 + _phi(z) / z


def incentive_shape_deriv(z):
    """F'(z) = -phi(z)/z^2."""
    z = np.asarray(z, dtype=float)
    return -_phi(z) / np.square(z)


def incentive_slope_inverse(c: float) -> float:
    """F^{-1}(c) for c > 0, by bracketing and root finding."""
    if not c > 0.0:
        raise ValueError("incentive level must be strictly positive")
    lo, hi = 1.0, 1.0
    while incentive_shape(lo) < c:
        lo /= 2.0
        if lo < 1e-300:
            raise ArithmeticError("bracket collapse inverting the incentive shape")
    while incentive_shape(hi) > c:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("bracket blowup inverting the incentive shape")
    return brentq(lambda z: incentive_shape(z) - c, lo, hi, xtol=1e-14, rtol=8.9e-16)


def normal_full_info_payoff(stat: NormalStat, s: float) -> float:
    """f(m, tau) = s Phi(z) + m (1 - Phi(z)) + phi(z)/sqrt(tau)."""
    z = (s - stat.mean) * np.sqrt(stat.precision)
    Phi = ndtr(z)
    return float(s * Phi + stat.mean * (1.0 - Phi) + _phi(z) / np.sqrt(stat.precision))


def normal_incentive(stat: NormalStat, s: float) -> float:
    """I(m, tau) = F((s - m) sqrt(tau)) for m < s, +inf otherwise."""
    if stat.mean >= s:
        return np.inf
    return float(incentive_shape((s - stat.mean) * np.sqrt(stat.precision)))


def normal_update(stat: NormalStat, dx: float, dt: float, total_intensity: float,
                  sigma: float) -> NormalStat:
    """One observation step: dX observed over dt at total intensity k0 + K.

    dm = (dX - m (k0+K) dt) / (tau sigma^2),  dtau = (k0+K) dt / sigma^2.
    The precision recursion is exact; the mean uses the pre-update precision,
    so composing two half steps matches one full step to O(dt^2).
    """
    if total_intensity < 0.0:
        raise ValueError("total intensity must be nonnegative")
    dm = (dx - stat.mean * total_intensity * dt) / (stat.precision * sigma**2)
    dtau = total_intensity * dt / sigma**2
    return NormalStat(mean=stat.mean + dm, precision=stat.precision + dtau)


# ---------------------------------------------------------------------------
# Poisson payoffs, gamma prior
# ---------------------------------------------------------------------------

def gamma_cdf(x, shape, rate):
    """CDF of the gamma distribution with the given shape and rate."""
    return gammainc(shape, np.asarray(rate, dtype=float) * np.asarray(x, dtype=float))


def gamma_cdf_rate_deriv(x, shape, rate):
    """d/d(rate) of the gamma CDF: (shape/rate) [G(x; a, b) - G(x; a+1, b)]."""
    return (shape / rate) * (gamma_cdf(x, shape, rate) - gamma_cdf(x, shape + 1.0, rate))


def gamma_full_info_payoff(stat: GammaStat, s: float) -> float:
    """f(alpha, beta) = s G(s; alpha, beta) + (alpha/beta) (1 - G(s; alpha+1, beta))."""
    a, b = stat.shape, stat.rate
    return float(s * gamma_cdf(s, a, b) + stat.mean * (1.0 - gamma_cdf(s, a + 1.0, b)))


def gamma_incentive(stat: GammaStat, s: float) -> float:
    """I(alpha, beta) for m = alpha/beta < s, +inf otherwise."""
    m = stat.mean
    if m >= s:
        return np.inf
    a, b = stat.shape, stat.rate
    num = s * gamma_cdf(s, a, b) - m * gamma_cdf(s, a + 1.0, b)
    return float(num / (s - m) - 1.0)


def gamma_incentive_rate_deriv(stat: GammaStat, s: float) -> float:
    """dI/d(beta) at fixed shape, assembled from the CDF rate-derivative identity."""
    a, b = stat.shape, stat.rate
    m = a / b
    G0 = gamma_cdf(s, a, b)
    G1 = gamma_cdf(s, a + 1.0, b)
    G2 = gamma_cdf(s, a + 2.0, b)
    num = s * G0 - m * G1
    den = s - m
    dG0 = (a / b) * (G0 - G1)
    dnum = s * dG0 + (a / b**2) * G1 - m * ((a + 1.0) / b) * (G1 - G2)
    dden = a / b**2
    return float((dnum * den - num * dden) / den**2)


def gamma_update(stat: GammaStat, arrivals: int, dt: float, total_intensity: float) -> GammaStat:
    """Bayes update after observing `arrivals` lumps over dt at intensity k0 + K."""
    if arrivals < 0:
        raise ValueError("arrivals must be nonnegative")
    if total_intensity < 0.0:
        raise ValueError("total intensity must be nonnegative")
    return GammaStat(shape=stat.shape + arrivals, rate=stat.rate + total_intensity * dt)


# ---------------------------------------------------------------------------
# equilibrium allocation and level curves in the (mean, variance) plane
# ---------------------------------------------------------------------------

def conjugate_incentive(stat, s: float) -> float:
    if isinstance(stat, NormalStat):
        return normal_incentive(stat, s)
    if isinstance(stat, GammaStat):
        return gamma_incentive(stat, s)
    raise TypeError(f"unsupported posterior statistic {type(stat).__name__}")


def conjugate_equilibrium_action(stat, s: float, k0: float, n_players: int) -> float:
    """Symmetric equilibrium allocation at a conjugate posterior."""
    return float(action_from_incentive(conjugate_incentive(stat, s), k0, n_players))


def incentive_at_mean_variance(kind: str, mean: float, variance: float, s: float) -> float:
    if kind == "normal":
        return normal_incentive(NormalStat(mean=mean, precision=1.0 / variance), s)
    if kind == "gamma":
        if mean <= 0.0:
            raise ValueError("gamma means must be strictly positive")
        return gamma_incentive(GammaStat.from_mean_variance(mean, variance), s)
    raise ValueError("kind must be 'normal' or 'gamma'")


def normal_level_variance(mean: float, level: float, s: float) -> float:
    """Variance on the I = level curve at the given mean (normal model)."""
    if mean >= s:
        raise ValueError("level curves exist only for means below the safe payoff")
    z = incentive_slope_inverse(level)
    return ((s - mean) / z) ** 2


def gamma_level_variance(mean: float, level: float, s: float) -> float:
    """Variance on the I = level curve at the given mean (gamma model), by root finding."""
    if not 0.0 < mean < s:
        raise ValueError("gamma level curves require 0 < mean < safe payoff")

    def shifted(v):
        return incentive_at_mean_variance("gamma", mean, v, s) - level

    lo, hi = 1e-8, 1.0
    while shifted(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("no variance reaches the requested incentive level")
    return brentq(shifted, lo, hi, xtol=1e-12, rtol=8.9e-16)


def level_curve_slope(kind: str, mean: float, variance: float, s: float,
                      step: float = 1e-6) -> float:
    """Slope dV/dm of the incentive level curve through (mean, variance)."""
    dI_dm = (
        incentive_at_mean_variance(kind, mean + step, variance, s)
        - incentive_at_mean_variance(kind, mean - step, variance, s)
    ) / (2.0 * step)
    dI_dV = (
        incentive_at_mean_variance(kind, mean, variance + step, s)
        - incentive_at_mean_variance(kind, mean, variance - step, s)
    ) / (2.0 * step)
    return float(-dI_dm / dI_dV)


# ---------------------------------------------------------------------------
# Lipschitz regularity reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalLipschitzReport:
    """Suprema of the partials of I/tau on the incentive band over R x [tau0, inf).

    On the level curve I = c, with zc = F^{-1}(c):
        d(I/tau)/dm   = -F'(zc) tau^{-1/2},
        d(I/tau)/dtau = (F'(zc) zc / 2 - c) tau^{-2};
    both are largest at tau = tau0 and are evaluated on a grid of levels.
    """

    band: tuple
    tau0: float
    n_levels: int
    sup_dm: float
    sup_dtau: float


def normal_lipschitz_report(band, tau0: float, n_levels: int = 200) -> NormalLipschitzReport:
    a, b = band
    if not (0.0 < a < b):
        raise ValueError("band must satisfy 0 < a < b")
    if not tau0 > 0.0:
        raise ValueError("tau0 must be strictly positive")
    levels = np.linspace(a, b, n_levels)
    zs = np.array([incentive_slope_inverse(c) for c in levels])
    fp = incentive_shape_deriv(zs)
    sup_dm = float(np.max(np.abs(fp)) / np.sqrt(tau0))
    sup_dtau = float(np.max(np.abs(0.5 * fp * zs - levels)) / tau0**2)
    return NormalLipschitzReport(
        band=(float(a), float(b)), tau0=float(tau0), n_levels=int(n_levels),
        sup_dm=sup_dm, sup_dtau=sup_dtau,
    )


@dataclass(frozen=True)
class GammaLipschitzReport:
    """First-derivative bound of I(alpha, .) on the band at fixed shape alpha.

    ``bracket_at_limit`` is G(s; alpha, alpha/s) - G(s; alpha+1, alpha/s),
    which is strictly positive; consequently the band's rate interval
    [beta_lo, beta_hi] keeps a positive gap above alpha/s, and |dI/dbeta|
    attains a finite supremum on it.
    """

    shape: float
    band: tuple
    beta_interval: tuple
    gap_above_mean_limit: float
    bracket_at_limit: float
    sup_dbeta: float
    n_grid: int


def gamma_lipschitz_report(shape: float, band, s: float,
                           n_grid: int = 200) -> GammaLipschitzReport:
    a, b = band
    if not (0.0 < a < b):
        raise ValueError("band must satisfy 0 < a < b")
    beta_limit = shape / s

    def inc(beta):
        return gamma_incentive(GammaStat(shape=shape, rate=beta), s)

    # I decreases in beta from +inf (at beta -> alpha/s) to 0 (beta -> inf)
    hi = 2.0 * beta_limit + 1.0
    while inc(hi) > a:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("failed to bracket the lower incentive level")
    beta_hi = brentq(lambda x: inc(x) - a, beta_limit * (1.0 + 1e-12) + 1e-300, hi,
                     xtol=1e-13, rtol=8.9e-16)
    beta_lo = brentq(lambda x: inc(x) - b, beta_limit * (1.0 + 1e-12) + 1e-300, beta_hi,
                     xtol=1e-13, rtol=8.9e-16)

    bracket = float(gamma_cdf(s, shape, beta_limit) - gamma_cdf(s, shape + 1.0, beta_limit))
    betas = np.linspace(beta_lo, beta_hi, n_grid)
    derivs = [gamma_incentive_rate_deriv(GammaStat(shape=shape, rate=bb), s) for bb in betas]
    return GammaLipschitzReport(
        shape=float(shape),
        band=(float(a), float(b)),
        beta_interval=(float(beta_lo), float(beta_hi)),
        gap_above_mean_limit=float(beta_lo - beta_limit),
        bracket_at_limit=bracket,
        sup_dbeta=float(np.max(np.abs(derivs))),
        n_grid=int(n_grid),
    )


# ---------------------------------------------------------------------------
# posterior-mean martingale simulations
# ---------------------------------------------------------------------------

def simulate_normal(stat0: NormalStat, sigma: float, total_intensity: float,
                    horizon: float, dt: float, n_paths: int, seed: int):
    """Simulate posterior means under the model's own prior at fixed intensity.

    Draws the true mean from the prior per path, then runs the exact-variance
    Euler filter.  Returns the (n_paths,) array of terminal posterior means.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    mu = stat0.mean + rng.standard_normal(n_paths) / np.sqrt(stat0.precision)
    m = np.full(n_paths, stat0.mean)
    tau = stat0.precision
    q = total_intensity
    steps = int(round(horizon / dt))
    for _ in range(steps):
        dx = mu * q * dt + sigma * np.sqrt(q * dt) * rng.standard_normal(n_paths)
        m = m + (dx - m * q * dt) / (tau * sigma**2)
        tau = tau + q * dt / sigma**2
    return m


def simulate_gamma(stat0: GammaStat, total_intensity: float, horizon: float,
                   dt: float, n_paths: int, seed: int):
    """Simulate gamma posterior means at fixed intensity; returns terminal alpha/beta."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    mu = rng.gamma(shape=stat0.shape, scale=1.0 / stat0.rate, size=n_paths)
    alpha = np.full(n_paths, stat0.shape)
    beta = stat0.rate
    q = total_intensity
    steps = int(round(horizon / dt))
    for _ in range(steps):
        alpha = alpha + rng.poisson(mu * q * dt)
        beta = beta + q * dt
    return alpha / beta

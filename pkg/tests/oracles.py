"""Independent numerical oracles used to pin down expected values.

These deliberately avoid the package's own closed forms: full-information
payoffs come from adaptive quadrature of the defining integral, and two-state
long-run values come from integrating the scalar stationarity ODE

    flow(pi) + (k0 + N kappa(pi)) * (1/2) D(pi) u''(pi) = 0,
    u(0) = u(1) = 0,

with D(pi) = (pi (1 - pi) (rho1 - rho0) / sigma)^2 the squared belief
volatility per unit of operational time.  The quadrature is anchored at an
interior point because u'' ~ 1 / (pi (1 - pi)^2) near the corners makes
corner-anchored forms diverge logarithmically.
"""

import math

import numpy as np
from scipy.integrate import quad

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def normal_f_quadrature(mean, variance, s):
    """E[max(s, mu)] under a normal posterior, by adaptive quadrature.

    Computed as s + E[(mu - s)+]; the tail integrand is smooth on [s, hi],
    so quad reaches ~1e-11 without kink handling.
    """
    sd = math.sqrt(variance)

    def tail(mu):
        z = (mu - mean) / sd
        return (mu - s) * math.exp(-0.5 * z * z) / (sd * _SQRT_2PI)

    hi = max(mean, s) + 14.0 * sd
    val, _ = quad(tail, s, hi, epsabs=1e-12, epsrel=1e-11, limit=200)
    return s + val


def gamma_f_quadrature(shape, rate, s):
    """E[max(s, mu)] under a gamma posterior, by adaptive quadrature."""
    if s <= 0.0:
        return shape / rate
    log_norm = shape * math.log(rate) - math.lgamma(shape)

    def tail(mu):
        return (mu - s) * math.exp(log_norm + (shape - 1.0) * math.log(mu) - rate * mu)

    mean = shape / rate
    sd = math.sqrt(shape) / rate
    hi = max(mean + 40.0 * sd, s) + 40.0 / rate
    val, _ = quad(tail, s, hi, epsabs=1e-12, epsrel=1e-11, limit=400)
    return s + val


def two_state_value(ps, rho, sigma, s, k0, n_players, kappa=None, kinks=()):
    """Exact symmetric-profile long-run value at beliefs ps (L = 1, no jumps).

    ``kappa`` maps a scalar belief to the common allocation; defaults to the
    closed-form equilibrium.  ``kinks`` lists interior beliefs where the
    allocation regime changes (quadrature break points).
    """
    rho0, rho1 = float(rho[0]), float(rho[1])
    d_rho = rho1 - rho0
    best0, best1 = max(s, rho0), max(s, rho1)

    if kappa is None:
        def kappa(p):
            m = rho0 + p * d_rho
            if m >= s:
                return 1.0
            f = (1.0 - p) * best0 + p * best1
            incentive = (f - s) / (s - m)
            return min(1.0, max(0.0, (incentive - k0) / (n_players - 1)))

    def curvature(p):
        if p <= 0.0 or p >= 1.0:
            return 0.0
        k = kappa(p)
        m = rho0 + p * d_rho
        f = (1.0 - p) * best0 + p * best1
        flow = (1.0 - k) * s + k * m - f
        diffusion = (p * (1.0 - p) * d_rho / sigma) ** 2
        return -2.0 * flow / ((k0 + n_players * k) * diffusion)

    anchor = 0.3
    interior_kinks = sorted(t for t in kinks if 0.0 < t < 1.0)

    def moment(p):
        lo, hi = (anchor, p) if p >= anchor else (p, anchor)
        pts = [t for t in interior_kinks if lo < t < hi]
        val, _ = quad(lambda t: (p - t) * curvature(t), anchor, p,
                      points=pts if pts else None, limit=400)
        return val

    # u(0) = u(a) - a u'(a) + J(0) = 0 and u(1) = u(a) + (1-a) u'(a) + J(1) = 0
    A = np.array([[1.0, -anchor], [1.0, 1.0 - anchor]])
    b = np.array([-moment(0.0), -moment(1.0)])
    u_a, du_a = np.linalg.solve(A, b)

    out = np.empty(len(ps))
    for i, p in enumerate(ps):
        if p in (0.0, 1.0):
            out[i] = 0.0
        else:
            out[i] = u_a + du_a * (p - anchor) + moment(p)
    return out

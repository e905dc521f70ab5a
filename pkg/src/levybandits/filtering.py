"""Belief filtering: Bayes jump updates, drift, diffusion, and the belief generator.

All quantities are expressed per unit of operational time (total observation
intensity 1); the actual total intensity k0 + sum_n k_n enters only as a
multiplicative time change, see :class:`ScaledGenerator`.

The belief process combines three effects.  Continuous payoff innovations
move the belief along the diffusion vector pi_l (rho_l - rho(pi)) / sigma.
Between jump arrivals the absence of news drifts the belief by
-pi_l (lambda_l - lambda(pi)).  An observed jump of size h triggers an exact
Bayes update pi_l -> pi_l nu_l({h}) / sum_i pi_i nu_i({h}); states that
assign rate zero to the observed atom are annihilated and the belief then
lives on the corresponding subsimplex forever.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LevyModel, full_belief


def _weighted_rates(model: LevyModel, pi):
    """Belief-weighted drift rho(pi), total rate lambda(pi), atom rates nu(pi)."""
    pf = full_belief(pi)
    rho_bar = pf @ model.rho
    atom_bar = pf @ model.atom_rates
    lam_bar = atom_bar.sum(axis=-1)
    return pf, rho_bar, lam_bar, atom_bar


def jump_update(model: LevyModel, pi, size: float) -> np.ndarray:
    """Posterior belief after observing a jump of the given atom size.

    Raises ValueError when the size matches no atom of the model or when the
    observation has probability zero under every state currently charged.
    """
    matches = np.flatnonzero(np.isclose(model.atom_sizes, size, rtol=1e-12, atol=0.0))
    if matches.size != 1:
        raise ValueError(f"jump size {size} matches no atom of the model")
    a = int(matches[0])
    pf = full_belief(pi)
    weights = pf * model.atom_rates[:, a]
    denom = weights.sum(axis=-1, keepdims=True)
    if np.any(denom <= 0.0):
        raise ValueError(
            f"observed jump size {size} has zero probability under every state "
            f"charged by the current belief"
        )
    posterior = weights / denom
    return posterior[..., 1:]


def belief_drift(model: LevyModel, pi) -> np.ndarray:
    """No-news drift of the free coordinates: -pi_l (lambda_l - lambda(pi))."""
    pf, _, lam_bar, _ = _weighted_rates(model, pi)
    lam = model.total_rates
    return -pf[..., 1:] * (lam[1:] - lam_bar[..., None])


def belief_diffusion(model: LevyModel, pi) -> np.ndarray:
    """Diffusion vector of the free coordinates: pi_l (rho_l - rho(pi)) / sigma.

    For L = 1 this reduces to (rho_1 - rho_0) pi (1 - pi) / sigma.
    """
    pf, rho_bar, _, _ = _weighted_rates(model, pi)
    return pf[..., 1:] * (model.rho[1:] - rho_bar[..., None]) / model.sigma


@dataclass(frozen=True)
class GeneratorStencil:
    """Local data of the belief generator at one belief point.

    ``diffusion`` is the instantaneous covariance matrix R R^T of the free
    coordinates (R the diffusion vector), ``drift`` the no-news drift,
    ``jump_rates`` the belief-weighted atom rates nu(pi)({h}), and
    ``jump_destinations`` the post-jump beliefs (rows align with the model's
    atom order; atoms with zero weighted rate keep the current belief).
    """

    pi: np.ndarray
    diffusion: np.ndarray          # (L, L)
    drift: np.ndarray              # (L,)
    jump_rates: np.ndarray         # (A,)
    jump_destinations: np.ndarray  # (A, L)


def generator_stencil(model: LevyModel, pi) -> GeneratorStencil:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1:
        raise ValueError("generator_stencil expects a single belief point")
    R = belief_diffusion(model, pi)
    pf = full_belief(pi)
    rates_bar = pf @ model.atom_rates
    dest = np.empty((model.atom_sizes.size, model.L))
    for a in range(model.atom_sizes.size):
        if rates_bar[a] > 0.0:
            w = pf * model.atom_rates[:, a]
            dest[a] = (w / w.sum())[1:]
        else:
            dest[a] = pi
    return GeneratorStencil(
        pi=pi.copy(),
        diffusion=np.outer(R, R),
        drift=belief_drift(model, pi),
        jump_rates=rates_bar,
        jump_destinations=dest,
    )


def _fd_gradient(u, pi, h):
    """Central differences, Richardson-extrapolated once."""
    L = pi.shape[0]
    def central(step):
        g = np.empty(L)
        for i in range(L):
            e = np.zeros(L)
            e[i] = step
            g[i] = (u(pi + e) - u(pi - e)) / (2.0 * step)
        return g
    d1 = central(h)
    d2 = central(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def _fd_hessian(u, pi, h):
    L = pi.shape[0]
    def hess(step):
        H = np.empty((L, L))
        u0 = u(pi)
        for i in range(L):
            ei = np.zeros(L)
            ei[i] = step
            H[i, i] = (u(pi + ei) - 2.0 * u0 + u(pi - ei)) / step**2
            for j in range(i + 1, L):
                ej = np.zeros(L)
                ej[j] = step
                H[i, j] = H[j, i] = (
                    u(pi + ei + ej) - u(pi + ei - ej) - u(pi - ei + ej) + u(pi - ei - ej)
                ) / (4.0 * step**2)
        return H
    h1 = hess(h)
    h2 = hess(h / 2.0)
    return (4.0 * h2 - h1) / 3.0


def apply_generator(model: LevyModel, u, pi, grad=None, hess=None, fd_step: float = 1e-4) -> float:
    """Generator of the belief process applied to a smooth field u at pi.

    ``u`` maps a free-coordinate belief to a scalar.  Analytic ``grad`` and
    ``hess`` callbacks are used when given; otherwise central differences of
    width ``fd_step`` (Richardson-extrapolated once) are taken, which
    requires pi to sit at distance at least 2*fd_step from the simplex
    boundary.
    """
    pi = np.asarray(pi, dtype=float)
    st = generator_stencil(model, pi)

    needs_fd = grad is None or hess is None
    if needs_fd:
        margin = 2.0 * fd_step
        pf = full_belief(pi)
        if np.any(pf < margin):
            raise ValueError(
                f"pi too close to the simplex boundary for the finite-difference "
                f"stencil (need distance >= {margin})"
            )

    g = np.asarray(grad(pi), dtype=float) if grad is not None else _fd_gradient(u, pi, fd_step)
    H = np.asarray(hess(pi), dtype=float) if hess is not None else _fd_hessian(u, pi, fd_step)

    u0 = float(u(pi))
    diffusion_term = 0.5 * float(np.sum(st.diffusion * H))
    drift_term = float(st.drift @ g)
    jump_term = 0.0
    for a in range(st.jump_rates.size):
        if st.jump_rates[a] > 0.0:
            jump_term += st.jump_rates[a] * (float(u(st.jump_destinations[a])) - u0)
    return diffusion_term + drift_term + jump_term


@dataclass(frozen=True)
class ScaledGenerator:
    """Belief generator under a given action profile: scale times the unit generator.

    ``intensities`` are the players' allocations; the scale is k0 + sum.
    """

    model: LevyModel
    intensities: tuple

    @property
    def scale(self) -> float:
        k = np.asarray(self.intensities, dtype=float)
        if np.any(k < 0.0) or np.any(k > 1.0):
            raise ValueError("intensities must lie in [0, 1]")
        return self.model.k0 + float(k.sum())

    def apply(self, u, pi, **kwargs) -> float:
        return self.scale * apply_generator(self.model, u, pi, **kwargs)


def scaled_generator(model: LevyModel, intensities) -> ScaledGenerator:
    return ScaledGenerator(model=model, intensities=tuple(float(k) for k in intensities))


# ---------------------------------------------------------------------------
# log-odds learning rates (two states)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogOddsDiagnostics:
    """Per-state learning behavior of the log posterior odds (L = 1 only).

    When the jump measure of state l is absolutely continuous with respect to
    the other state's, ``eta_l`` is the drift of the log odds per unit of
    operational time under state l (eta_0 < 0 < eta_1) and the identifying
    rate is zero.  Otherwise some atom reveals state l outright; ``eta_l`` is
    None and ``identify_rate_l`` is the total rate nu_l(B) of the revealing
    atoms, so the posterior hits the vertex by time t with probability at
    least 1 - exp(-identify_rate_l * (operational time)).
    """

    eta0: float | None
    eta1: float | None
    identify_rate0: float
    identify_rate1: float

    def drift_rate(self, state: int) -> float:
        """|eta| of the given state; raises if that state is in the identifying regime."""
        eta = (self.eta0, self.eta1)[state]
        if eta is None:
            raise ValueError(f"state {state} identifies itself by a revealing atom; "
                             f"no finite log-odds drift")
        return abs(eta)


def learning_rates(model: LevyModel) -> LogOddsDiagnostics:
    """Log-odds drift rates eta_0, eta_1 or identifying rates for L = 1 models."""
    if model.L != 1:
        raise ValueError("learning_rates requires a two-state model (L = 1)")
    r0 = model.atom_rates[0]
    r1 = model.atom_rates[1]
    diffusion = (model.rho[1] - model.rho[0]) ** 2 / (2.0 * model.sigma**2)
    lam0, lam1 = model.total_rates

    only1 = (r1 > 0.0) & (r0 == 0.0)
    only0 = (r0 > 0.0) & (r1 == 0.0)
    common = (r0 > 0.0) & (r1 > 0.0)
    log_ratio = np.zeros_like(r0)
    log_ratio[common] = np.log(r1[common] / r0[common])

    identify1 = float(r1[only1].sum())
    identify0 = float(r0[only0].sum())

    eta1 = None
    if identify1 == 0.0:
        eta1 = float(diffusion - (lam1 - lam0) + (log_ratio * r1).sum())
    eta0 = None
    if identify0 == 0.0:
        eta0 = float(-diffusion - (lam1 - lam0) + (log_ratio * r0).sum())

    return LogOddsDiagnostics(
        eta0=eta0, eta1=eta1, identify_rate0=identify0, identify_rate1=identify1
    )

"""Monte Carlo simulation of belief and payoff dynamics under Markov profiles.

Paths are simulated state-conditionally: each path draws its true payoff state
from the run's initial belief, then evolves the filtered belief by an Euler
scheme driven by the same randomness that generates the payoffs.  Per step of
width dt, with actions evaluated at the pre-jump belief and total intensity
q = k0 + sum_n k_n frozen across the step:

* the aggregate continuous payoff increment is dC = rho_state q dt
  + sigma sqrt(q dt) xi, and the belief moves along the innovation
  pi_l += pi_l (rho_l - rho(pi)) sigma^{-2} (dC - rho(pi) q dt);
* absence of news drifts the belief by -pi_l (lambda_l - lambda(pi)) q dt;
* a jump arrives with probability 1 - exp(-lambda_state q dt) (exact
  exponential clock, one arrival per step), its size is drawn from the true
  state's atom distribution, and the belief jumps by exact Bayes updating.

Beliefs are clipped and renormalized onto the simplex; adjustments above
1e-12 are counted and the largest is reported.

Randomness is split into fixed-size path chunks, each driven by its own
counter-based Philox stream keyed (seed, chunk index), so results are
bit-identical for a given configuration regardless of thread count.  All
runs passed to one engine call consume identical draws (common random
numbers): deviation experiments pair paths across profiles, and value-field
estimation pairs paths across initial beliefs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equilibrium import ClosedFormEquilibrium, Strategy
from .filtering import learning_rates
from .model import LevyModel

CLIP_TOL = 1e-12
LOG_FLOOR = 1e-300
FINITE_CHECK_EVERY = 128

THREADS_ENV_VAR = "LEVYBANDITS_THREADS"


class BeliefOverflowError(ArithmeticError):
    """A belief component left the finite range during simulation.

    Carries enough context (chunk seed pair and the step window) to replay
    the offending paths deterministically.
    """

    def __init__(self, seed, chunk_index, step, run_index, path_index):
        self.seed = seed
        self.chunk_index = chunk_index
        self.step = step
        self.run_index = run_index
        self.path_index = path_index
        super().__init__(
            f"non-finite belief at step <= {step} "
            f"(seed={seed}, chunk={chunk_index}, run={run_index}, "
            f"path={path_index}); reduce dt or check the model"
        )


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimConfig:
    """Simulation configuration.

    ``fixed_state`` conditions every path on one true state instead of
    drawing it from the initial belief.  ``record_every`` thins the recorded
    time series (0 picks about 256 sample times).  ``chunk_size`` fixes the
    RNG chunking and therefore the exact draws; it is part of the resolved
    configuration echoed into outputs.
    """

    horizon: float
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 0
    fixed_state: int | None = None
    record_every: int = 0
    record_paths: int = 0
    chunk_size: int = 16_384
    threads: int = 0  # 0: use LEVYBANDITS_THREADS or 1

    def resolved(self) -> dict:
        steps = int(round(self.horizon / self.dt))
        return {
            "horizon": steps * self.dt,
            "dt": self.dt,
            "steps": steps,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "fixed_state": self.fixed_state,
            "record_every": self.record_every or max(1, steps // 256),
            "record_paths": self.record_paths,
            "chunk_size": self.chunk_size,
        }


@dataclass(frozen=True)
class RunSpec:
    """One run inside a shared-randomness engine call."""

    profile: tuple          # N strategies
    init_belief: np.ndarray  # (L,) free coordinates; also the state-drawing prior
    label: str = ""


@dataclass
class PathEnsemble:
    """Simulation output for one run.

    Per-path arrays: the realized state, terminal belief, per-player shortfall
    integral over [0, T] and operational time.  Recorded ensemble series: mean
    belief, mean m and f, per-player-group mean shortfall integrand, and (when
    the run is state-conditioned) the mean belief error and mean log error.
    """

    label: str
    config: SimConfig
    times: np.ndarray                 # (R,)
    states: np.ndarray                # (n_paths,)
    final_belief: np.ndarray          # (n_paths, L)
    shortfall: np.ndarray             # (n_paths, N)
    op_time: np.ndarray               # (n_paths, N)
    mean_belief: np.ndarray           # (R, L)
    mean_m: np.ndarray                # (R,)
    mean_f: np.ndarray                # (R,)
    mean_integrand: np.ndarray        # (R, N)
    mean_err: np.ndarray | None       # (R,)
    mean_log_err: np.ndarray | None   # (R,)
    sample_paths: np.ndarray          # (n_sample, R, L)
    clip_drift: float
    clip_events: int
    zero_prob_jumps: int

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def shortfall_mean(self, player: int = 0) -> float:
        return float(self.shortfall[:, player].mean())

    def shortfall_se(self, player: int = 0) -> float:
        x = self.shortfall[:, player]
        return float(x.std(ddof=1) / np.sqrt(x.shape[0]))


def _record_indices(steps: int, record_every: int):
    every = record_every or max(1, steps // 256)
    idx = list(range(0, steps + 1, every))
    if idx[-1] != steps:
        idx.append(steps)
    return np.asarray(idx, dtype=int)


def _profile_groups(profile):
    """Group player slots sharing one strategy object."""
    groups = []
    seen = {}
    for slot, strat in enumerate(profile):
        key = id(strat)
        if key in seen:
            groups[seen[key]][1].append(slot)
        else:
            seen[key] = len(groups)
            groups.append((strat, [slot]))
    return groups


class _ChunkAccumulator:
    """Order-fixed reduction of per-chunk results."""

    def __init__(self, runs, n_rec, L, N):
        R = len(runs)
        self.states = [[] for _ in range(R)]
        self.final_belief = [[] for _ in range(R)]
        self.shortfall = [[] for _ in range(R)]
        self.op_time = [[] for _ in range(R)]
        self.sum_belief = np.zeros((R, n_rec, L))
        self.sum_m = np.zeros((R, n_rec))
        self.sum_f = np.zeros((R, n_rec))
        self.sum_integrand = np.zeros((R, n_rec, N))
        self.sum_err = np.zeros((R, n_rec))
        self.sum_logerr = np.zeros((R, n_rec))
        self.sample_paths = [None] * R
        self.clip_drift = 0.0
        self.clip_events = 0
        self.zero_prob_jumps = 0

    def add(self, chunk):
        for r in range(len(self.states)):
            self.states[r].append(chunk["states"][r])
            self.final_belief[r].append(chunk["final_belief"][r])
            self.shortfall[r].append(chunk["shortfall"][r])
            self.op_time[r].append(chunk["op_time"][r])
            if chunk["sample_paths"] is not None and self.sample_paths[r] is None:
                self.sample_paths[r] = chunk["sample_paths"][r]
        self.sum_belief += chunk["sum_belief"]
        self.sum_m += chunk["sum_m"]
        self.sum_f += chunk["sum_f"]
        self.sum_integrand += chunk["sum_integrand"]
        self.sum_err += chunk["sum_err"]
        self.sum_logerr += chunk["sum_logerr"]
        self.clip_drift = max(self.clip_drift, chunk["clip_drift"])
        self.clip_events += chunk["clip_events"]
        self.zero_prob_jumps += chunk["zero_prob_jumps"]


def _run_chunk(model, runs, config, chunk_index, n_chunk_paths, rec_idx):
    """Simulate one chunk of paths for all runs with shared draws."""
    L = model.L
    R = len(runs)
    P = n_chunk_paths
    N = model.n_players
    dt = config.dt
    steps = int(round(config.horizon / dt))
    s = model.safe_payoff
    sigma2 = model.sigma**2

    mu = model.state_means
    best = np.maximum(s, mu)
    rho = model.rho
    lam = model.total_rates
    has_atoms = model.atom_sizes.size > 0
    if has_atoms:
        with np.errstate(invalid="ignore", divide="ignore"):
            cum_atoms = np.cumsum(model.atom_rates, axis=1) / lam[:, None]
        cum_atoms[lam == 0.0] = 1.0

    key = np.array([config.seed & 0xFFFFFFFFFFFFFFFF, chunk_index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))

    # identical draws for every run: state uniform, then per-step noise
    u_state = rng.random(P)
    pi = np.empty((R, P, L))
    state = np.empty((R, P), dtype=np.int64)
    for r, run in enumerate(runs):
        pi[r] = run.init_belief[None, :]
        if config.fixed_state is not None:
            state[r] = config.fixed_state
        else:
            pf = np.concatenate([[1.0 - run.init_belief.sum()], run.init_belief])
            state[r] = np.searchsorted(np.cumsum(pf), u_state, side="right")
    np.clip(state, 0, model.L, out=state)

    groups = [_profile_groups(run.profile) for run in runs]
    unique_strats = {}
    for gs in groups:
        for strat, _ in gs:
            unique_strats[id(strat)] = strat

    shortfall_sum = np.zeros((R, P, N))
    first_g = np.zeros((R, P, N))
    op_sum = np.zeros((R, P, N))
    first_k = np.zeros((R, P, N))

    n_rec = rec_idx.size
    sum_belief = np.zeros((R, n_rec, L))
    sum_m = np.zeros((R, n_rec))
    sum_f = np.zeros((R, n_rec))
    sum_integrand = np.zeros((R, n_rec, N))
    sum_err = np.zeros((R, n_rec))
    sum_logerr = np.zeros((R, n_rec))
    n_sample = min(config.record_paths, P) if (chunk_index == 0 and config.record_paths) else 0
    sample = np.zeros((R, n_sample, n_rec, L)) if n_sample else None

    clip_drift = 0.0
    clip_events = 0
    zero_prob_jumps = 0

    err_vertex = None
    if config.fixed_state is not None:
        err_vertex = config.fixed_state  # error = 1 - pi_{true state}

    rec_pos = {int(i): j for j, i in enumerate(rec_idx)}

    def record(j, m_val, f_val, g_players):
        sum_belief[:, j, :] += pi.sum(axis=1)
        sum_m[:, j] += m_val.sum(axis=1)
        sum_f[:, j] += f_val.sum(axis=1)
        sum_integrand[:, j, :] += g_players.sum(axis=1)
        if err_vertex is not None:
            if err_vertex == 0:
                err = pi.sum(axis=-1)
            else:
                err = 1.0 - pi[..., err_vertex - 1]
            sum_err[:, j] += err.sum(axis=1)
            sum_logerr[:, j] += np.log(np.maximum(err, LOG_FLOOR)).sum(axis=1)
        if n_sample:
            sample[:, :, j, :] = pi[:, :n_sample, :]

    def payoff_fields():
        m_val = mu[0] + pi @ (mu[1:] - mu[0])
        f_val = best[0] + pi @ (best[1:] - best[0])
        return m_val, f_val

    def actions_and_integrand(m_val, f_val):
        evals = {sid: np.asarray(strat(pi), dtype=float)
                 for sid, strat in unique_strats.items()}
        k_players = np.empty((R, P, N))
        for r, gs in enumerate(groups):
            for strat, slots in gs:
                k_players[r, :, slots] = evals[id(strat)][r]
        g_players = (1.0 - k_players) * s + k_players * m_val[..., None] - f_val[..., None]
        return k_players, g_players

    m_val, f_val = payoff_fields()
    k_players, g_players = actions_and_integrand(m_val, f_val)
    first_g[:] = g_players
    first_k[:] = k_players
    record(0, m_val, f_val, g_players)

    rho_state = rho[state]
    lam_state = lam[state] if has_atoms else None

    for i in range(steps):
        q = model.k0 + k_players.sum(axis=2)
        shortfall_sum += g_players
        op_sum += k_players

        xi = rng.standard_normal(P)
        dC = rho_state * q * dt + model.sigma * np.sqrt(q * dt) * xi
        rho_bar = rho[0] + pi @ (rho[1:] - rho[0])
        innov = (dC - rho_bar * q * dt) / sigma2
        pi = pi + pi * (rho[1:] - rho_bar[..., None]) * innov[..., None]

        if has_atoms:
            lam_bar = lam[0] + pi @ (lam[1:] - lam[0])
            pi += -pi * (lam[1:] - lam_bar[..., None]) * (q * dt)[..., None]
            u_arr = rng.random(P)
            u_atom = rng.random(P)
            p_jump = -np.expm1(-lam_state * q * dt)
            arr = u_arr < p_jump
            if np.any(arr):
                rr, pp = np.nonzero(arr)
                cum_sel = cum_atoms[state[rr, pp]]
                a_idx = np.minimum(
                    (u_atom[pp][:, None] >= cum_sel).sum(axis=1),
                    model.atom_sizes.size - 1,
                )
                pi_sel = pi[rr, pp]
                pf_sel = np.concatenate(
                    [1.0 - pi_sel.sum(axis=1, keepdims=True), pi_sel], axis=1
                )
                w = pf_sel * model.atom_rates[:, a_idx].T
                denom = w.sum(axis=1)
                good = denom > 0.0
                zero_prob_jumps += int((~good).sum())
                if np.any(good):
                    post = w[good] / denom[good, None]
                    pi[rr[good], pp[good]] = post[:, 1:]

        # simplex projection, counting only meaningful adjustments
        pi0 = 1.0 - pi.sum(axis=-1)
        bad = (pi0 < 0.0) | (pi < 0.0).any(axis=-1)
        if np.any(bad):
            rows = pi[bad]
            pf = np.concatenate([(1.0 - rows.sum(axis=1))[:, None], rows], axis=1)
            pf_clip = np.maximum(pf, 0.0)
            pf_norm = pf_clip / pf_clip.sum(axis=1, keepdims=True)
            step_drift = float(np.max(np.abs(pf_norm - pf)))
            if step_drift > CLIP_TOL:
                clip_drift = max(clip_drift, step_drift)
                clip_events += int(bad.sum())
            pi[bad] = pf_norm[:, 1:]

        if (i + 1) % FINITE_CHECK_EVERY == 0 or i + 1 == steps:
            if not np.isfinite(pi).all():
                r_bad, p_bad, _ = np.argwhere(~np.isfinite(pi))[0]
                raise BeliefOverflowError(
                    config.seed, chunk_index, i + 1, int(r_bad), int(p_bad)
                )

        m_val, f_val = payoff_fields()
        k_players, g_players = actions_and_integrand(m_val, f_val)
        j = rec_pos.get(i + 1)
        if j is not None:
            record(j, m_val, f_val, g_players)

    # trapezoid correction of the left Riemann sums
    shortfall = dt * (shortfall_sum + 0.5 * (g_players - first_g))
    op_time = dt * (op_sum + 0.5 * (k_players - first_k))

    return {
        "states": [state[r].copy() for r in range(R)],
        "final_belief": [pi[r].copy() for r in range(R)],
        "shortfall": [shortfall[r] for r in range(R)],
        "op_time": [op_time[r] for r in range(R)],
        "sum_belief": sum_belief,
        "sum_m": sum_m,
        "sum_f": sum_f,
        "sum_integrand": sum_integrand,
        "sum_err": sum_err,
        "sum_logerr": sum_logerr,
        "sample_paths": sample,
        "clip_drift": clip_drift,
        "clip_events": clip_events,
        "zero_prob_jumps": zero_prob_jumps,
    }


def _simulate_runs(model: LevyModel, runs, config: SimConfig):
    """Simulate all runs under shared randomness; returns one ensemble per run."""
    for run in runs:
        if len(run.profile) != model.n_players:
            raise ValueError("profile must supply one strategy per player")
        if run.init_belief.shape != (model.L,):
            raise ValueError("init_belief must use free coordinates (L,)")
    if config.fixed_state is not None and not 0 <= config.fixed_state <= model.L:
        raise ValueError("fixed_state out of range")

    steps = int(round(config.horizon / config.dt))
    if steps < 1:
        raise ValueError("horizon must cover at least one step")
    rec_idx = _record_indices(steps, config.record_every)

    if config.n_paths < 1:
        raise ValueError("n_paths must be positive")
    bounds = list(range(0, config.n_paths, config.chunk_size)) + [config.n_paths]
    chunks = [(ci, bounds[ci + 1] - bounds[ci]) for ci in range(len(bounds) - 1)]

    acc = _ChunkAccumulator(runs, rec_idx.size, model.L, model.n_players)
    threads = config.threads or default_threads()

    def work(spec):
        ci, size = spec
        return _run_chunk(model, runs, config, ci, size, rec_idx)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    for res in results:  # fixed chunk order: reduction independent of scheduling
        acc.add(res)

    n = config.n_paths
    times = rec_idx * config.dt
    out = []
    for r, run in enumerate(runs):
        has_err = config.fixed_state is not None
        out.append(
            PathEnsemble(
                label=run.label,
                config=config,
                times=times,
                states=np.concatenate(acc.states[r]),
                final_belief=np.concatenate(acc.final_belief[r]),
                shortfall=np.concatenate(acc.shortfall[r]),
                op_time=np.concatenate(acc.op_time[r]),
                mean_belief=acc.sum_belief[r] / n,
                mean_m=acc.sum_m[r] / n,
                mean_f=acc.sum_f[r] / n,
                mean_integrand=acc.sum_integrand[r] / n,
                mean_err=acc.sum_err[r] / n if has_err else None,
                mean_log_err=acc.sum_logerr[r] / n if has_err else None,
                sample_paths=(
                    acc.sample_paths[r]
                    if acc.sample_paths[r] is not None
                    else np.zeros((0, times.size, model.L))
                ),
                clip_drift=acc.clip_drift,
                clip_events=acc.clip_events,
                zero_prob_jumps=acc.zero_prob_jumps,
            )
        )
    return out


def _normalize_profile(model: LevyModel, profile):
    if isinstance(profile, Strategy):
        return tuple([profile] * model.n_players)
    profile = tuple(profile)
    if len(profile) != model.n_players:
        raise ValueError(
            f"profile must supply {model.n_players} strategies, got {len(profile)}"
        )
    return profile


def simulate(model: LevyModel, profile, config: SimConfig,
             init_belief=None) -> PathEnsemble:
    """Simulate one profile from the model prior (or a given initial belief)."""
    init = model.prior_free if init_belief is None else np.asarray(init_belief, dtype=float)
    run = RunSpec(profile=_normalize_profile(model, profile), init_belief=init)
    return _simulate_runs(model, [run], config)[0]


# ---------------------------------------------------------------------------
# estimators and diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LraEstimate:
    """Long-run average shortfall estimate for one player.

    ``tail_bound`` is the magnitude of the fitted exponential tail integral
    over [T, inf); infinite when the recorded mean integrand does not decay.
    """

    value: float
    se: float
    horizon: float
    tail_rate: float
    tail_bound: float


def _affine_fit(x, y):
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef  # intercept, slope


def estimate_lra_payoff(ensemble: PathEnsemble, player: int = 0,
                        tail_window: float = 0.25) -> LraEstimate:
    """Mean per-path shortfall integral with a fitted exponential tail bound.

    Fits c * exp(-r t) to the magnitude of the ensemble mean integrand over
    the last ``tail_window`` fraction of [0, T].
    """
    value = ensemble.shortfall_mean(player)
    se = ensemble.shortfall_se(player)
    T = float(ensemble.times[-1])
    sel = ensemble.times >= (1.0 - tail_window) * T
    mag = np.abs(ensemble.mean_integrand[sel, player])
    ts = ensemble.times[sel]
    keep = mag > 1e-14
    if keep.sum() < 3:
        return LraEstimate(value=value, se=se, horizon=T, tail_rate=np.inf, tail_bound=0.0)
    intercept, slope = _affine_fit(ts[keep], np.log(mag[keep]))
    rate = -slope
    if rate <= 0.0:
        return LraEstimate(value=value, se=se, horizon=T, tail_rate=rate, tail_bound=np.inf)
    tail = np.exp(intercept - rate * T) / rate
    return LraEstimate(value=value, se=se, horizon=T, tail_rate=rate, tail_bound=float(tail))


@dataclass(frozen=True)
class ConvergenceReport:
    """Fitted exponential learning rates for a state-conditioned ensemble.

    ``rate_mean_log`` fits the ensemble mean of log error, whose drift is the
    log-odds rate eta times the total intensity exactly; this is the primary
    figure.  ``rate_log_mean`` fits the log of the mean error, which is
    dominated by rare slow paths and decays strictly slower (about a quarter
    of the log-odds rate in the pure Brownian case); reported for reference.
    """

    state: int
    window: tuple
    rate_mean_log: float
    rate_log_mean: float
    eta: float | None
    identify_rate: float
    intensity_floor: float
    threshold: float
    passes: bool


def convergence_diagnostics(model: LevyModel, ensemble: PathEnsemble,
                            fit_window: float = 0.5,
                            slack_fraction: float = 0.2) -> ConvergenceReport:
    """Fit belief-error decay rates and compare them to the log-odds bound.

    Requires a state-conditioned ensemble.  The pass criterion checks
    rate_mean_log >= (1 - slack) |eta_state| k0, with k0 the guaranteed
    intensity floor (players may experiment more, never less).
    """
    if ensemble.mean_log_err is None:
        raise ValueError("convergence diagnostics need a fixed-state ensemble")
    state = ensemble.config.fixed_state
    T = float(ensemble.times[-1])
    sel = ensemble.times >= (1.0 - fit_window) * T
    ts = ensemble.times[sel]

    _, slope_ml = _affine_fit(ts, ensemble.mean_log_err[sel])
    rate_mean_log = -float(slope_ml)

    mean_err = np.maximum(ensemble.mean_err[sel], LOG_FLOOR)
    _, slope_lm = _affine_fit(ts, np.log(mean_err))
    rate_log_mean = -float(slope_lm)

    eta = None
    identify = 0.0
    if model.L == 1:
        diag = learning_rates(model)
        eta = (diag.eta0, diag.eta1)[state]
        identify = (diag.identify_rate0, diag.identify_rate1)[state]

    threshold = (1.0 - slack_fraction) * abs(eta) * model.k0 if eta is not None else np.nan
    passes = bool(eta is not None and rate_mean_log >= threshold)
    return ConvergenceReport(
        state=state,
        window=(float(ts[0]), T),
        rate_mean_log=rate_mean_log,
        rate_log_mean=rate_log_mean,
        eta=eta,
        identify_rate=identify,
        intensity_floor=model.k0,
        threshold=threshold,
        passes=passes,
    )


@dataclass(frozen=True)
class DeviationReport:
    """Paired comparison of a unilateral deviation against equilibrium play."""

    deviation: str
    init_belief: tuple
    eq_value: float
    eq_se: float
    dev_value: float
    dev_se: float
    diff_mean: float
    diff_se: float

    @property
    def improvement_sigmas(self) -> float:
        if self.diff_se == 0.0:
            return 0.0 if self.diff_mean <= 0.0 else np.inf
        return self.diff_mean / self.diff_se


def unilateral_deviation_value(model: LevyModel, deviation: Strategy,
                               config: SimConfig, init_belief=None) -> DeviationReport:
    """Payoff change when player 0 deviates while others play the equilibrium.

    Both profiles run on common random numbers, so the difference is a
    per-path paired statistic with far smaller variance than the two values.
    """
    eq = ClosedFormEquilibrium(model)
    init = model.prior_free if init_belief is None else np.asarray(init_belief, dtype=float)
    base = tuple([eq] * model.n_players)
    dev = (deviation,) + tuple([eq] * (model.n_players - 1))
    runs = [
        RunSpec(profile=base, init_belief=init, label="equilibrium"),
        RunSpec(profile=dev, init_belief=init, label=f"deviation {deviation.describe()}"),
    ]
    ens_eq, ens_dev = _simulate_runs(model, runs, config)
    diff = ens_dev.shortfall[:, 0] - ens_eq.shortfall[:, 0]
    return DeviationReport(
        deviation=deviation.describe(),
        init_belief=tuple(float(x) for x in init),
        eq_value=ens_eq.shortfall_mean(0),
        eq_se=ens_eq.shortfall_se(0),
        dev_value=ens_dev.shortfall_mean(0),
        dev_se=ens_dev.shortfall_se(0),
        diff_mean=float(diff.mean()),
        diff_se=float(diff.std(ddof=1) / np.sqrt(diff.shape[0])) if diff.shape[0] > 1 else 0.0,
    )

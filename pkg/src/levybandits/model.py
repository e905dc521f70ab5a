"""Model primitives: payoff states, jump measures, beliefs and static payoff functions.

A model has L+1 payoff states.  In state l the risky arm, operated at full
intensity, pays a Levy process with drift rho_l, Brownian volatility sigma
(common to all states) and a compound Poisson part with a finite set of
nonzero atom sizes h, each arriving at rate nu_l({h}).  The mean flow payoff
of state l is mu_l = rho_l + sum_h h * nu_l({h}).  States are ordered so the
mu_l are strictly increasing, and the safe flow payoff s lies strictly
between mu_0 and mu_L.

Beliefs live on the L-simplex and are stored as the L free coordinates
(pi_1, ..., pi_L); the weight pi_0 on the worst state is implicit.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

PRIOR_SUM_TOL = 1e-9


class ModelValidationError(ValueError):
    """Model parameters violate a structural requirement.

    The message always names the offending field and the invariant.
    """


@dataclass(frozen=True, eq=False)
class LevyModel:
    """Immutable model description.  Use :func:`make_model` or :func:`load_model`."""

    rho: np.ndarray          # (L+1,) drift of the continuous payoff part
    atom_sizes: np.ndarray   # (A,) distinct nonzero jump sizes, union over states
    atom_rates: np.ndarray   # (L+1, A) arrival rate of each atom under each state
    sigma: float             # Brownian volatility, common to all states
    safe_payoff: float       # known flow payoff of the safe arm
    prior: np.ndarray        # (L+1,) initial belief over states
    k0: float                # background information intensity
    n_players: int

    @property
    def n_states(self) -> int:
        return self.rho.shape[0]

    @property
    def L(self) -> int:
        return self.rho.shape[0] - 1

    @property
    def total_rates(self) -> np.ndarray:
        """lambda_l = nu_l(R \\ {0}), total jump rate per state, shape (L+1,)."""
        return self.atom_rates.sum(axis=1)

    @property
    def state_means(self) -> np.ndarray:
        """mu_l = rho_l + sum_h h nu_l({h}), shape (L+1,)."""
        return self.rho + self.atom_rates @ self.atom_sizes

    @property
    def prior_free(self) -> np.ndarray:
        """Prior in free coordinates (pi_1, ..., pi_L)."""
        return self.prior[1:].copy()

    def to_dict(self) -> dict:
        states = []
        for l in range(self.n_states):
            jumps = [
                {"size": float(h), "rate": float(r)}
                for h, r in zip(self.atom_sizes, self.atom_rates[l])
                if r > 0.0
            ]
            states.append({"rho": float(self.rho[l]), "jumps": jumps})
        return {
            "states": states,
            "sigma": float(self.sigma),
            "safe_payoff": float(self.safe_payoff),
            "prior": [float(p) for p in self.prior],
            "k0": float(self.k0),
            "n_players": int(self.n_players),
        }


def _fail(field: str, msg: str) -> None:
    raise ModelValidationError(f"{field}: {msg}")


def make_model(states, sigma, safe_payoff, prior, k0, n_players) -> LevyModel:
    """Build and validate a model.

    ``states`` is a sequence of ``(rho, jumps)`` pairs ordered by state index,
    where ``jumps`` is a sequence of ``(size, rate)`` atoms.  Sizes must be
    nonzero; rates nonnegative.  Only finite-support jump measures are
    representable.
    """
    if len(states) < 2:
        _fail("states", "at least two states are required")

    rho = np.empty(len(states))
    per_state_atoms = []
    for l, (r, jumps) in enumerate(states):
        if not np.isfinite(r):
            _fail("states", f"state {l}: rho must be finite")
        rho[l] = float(r)
        atoms = {}
        for size, rate in jumps:
            size = float(size)
            rate = float(rate)
            if size == 0.0 or not np.isfinite(size):
                _fail("states", f"state {l}: jump size must be nonzero and finite")
            if rate < 0.0 or not np.isfinite(rate):
                _fail("states", f"state {l}: jump rate must be nonnegative and finite")
            if size in atoms:
                _fail("states", f"state {l}: duplicate jump size {size}")
            atoms[size] = rate
        per_state_atoms.append(atoms)

    sizes = sorted({h for atoms in per_state_atoms for h, r in atoms.items() if r > 0.0})
    atom_sizes = np.array(sizes, dtype=float)
    atom_rates = np.zeros((len(states), len(sizes)))
    for l, atoms in enumerate(per_state_atoms):
        for a, h in enumerate(sizes):
            atom_rates[l, a] = atoms.get(h, 0.0)

    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0.0):
        _fail("sigma", "must be strictly positive and finite")

    mu = rho + atom_rates @ atom_sizes
    if not np.all(np.diff(mu) > 0.0):
        _fail("states", f"state means must be strictly increasing; got mu={mu.tolist()}")

    safe_payoff = float(safe_payoff)
    if not (mu[0] < safe_payoff < mu[-1]):
        _fail(
            "safe_payoff",
            f"must lie strictly between the lowest and highest state means "
            f"({mu[0]} and {mu[-1]}); got {safe_payoff}",
        )

    prior = np.asarray(prior, dtype=float)
    if prior.shape != (len(states),):
        _fail("prior", f"must have one entry per state ({len(states)}); got {prior.shape}")
    if np.any(prior < 0.0) or not np.all(np.isfinite(prior)):
        _fail("prior", "entries must be nonnegative and finite")
    if abs(prior.sum() - 1.0) > PRIOR_SUM_TOL:
        _fail("prior", f"entries must sum to 1 within {PRIOR_SUM_TOL}; got sum {prior.sum()!r}")

    k0 = float(k0)
    if not (np.isfinite(k0) and k0 > 0.0):
        _fail("k0", "must be strictly positive and finite")

    if not (isinstance(n_players, (int, np.integer)) and n_players >= 1):
        _fail("n_players", "must be a positive integer")

    model = LevyModel(
        rho=rho,
        atom_sizes=atom_sizes,
        atom_rates=atom_rates,
        sigma=sigma,
        safe_payoff=safe_payoff,
        prior=prior / prior.sum(),
        k0=k0,
        n_players=int(n_players),
    )
    model.rho.flags.writeable = False
    model.atom_sizes.flags.writeable = False
    model.atom_rates.flags.writeable = False
    model.prior.flags.writeable = False
    return model


_REQUIRED_FIELDS = ("states", "sigma", "safe_payoff", "prior", "k0", "n_players")


def model_from_dict(data: dict) -> LevyModel:
    if not isinstance(data, dict):
        raise ModelValidationError("model: top-level JSON value must be an object")
    for key in _REQUIRED_FIELDS:
        if key not in data:
            _fail(key, "required field is missing")
    extra = set(data) - set(_REQUIRED_FIELDS)
    if extra:
        _fail(sorted(extra)[0], "unknown field")

    raw_states = data["states"]
    if not isinstance(raw_states, list):
        _fail("states", "must be a list of state objects")
    states = []
    for l, st in enumerate(raw_states):
        if not isinstance(st, dict) or "rho" not in st:
            _fail("states", f"state {l}: must be an object with a 'rho' field")
        jumps = st.get("jumps", [])
        if not isinstance(jumps, list):
            _fail("states", f"state {l}: 'jumps' must be a list")
        parsed = []
        for j in jumps:
            if not isinstance(j, dict) or "size" not in j or "rate" not in j:
                _fail("states", f"state {l}: each jump needs 'size' and 'rate'")
            parsed.append((j["size"], j["rate"]))
        extra_keys = set(st) - {"rho", "jumps"}
        if extra_keys:
            _fail("states", f"state {l}: unknown field {sorted(extra_keys)[0]!r}")
        states.append((st["rho"], parsed))

    return make_model(
        states,
        sigma=data["sigma"],
        safe_payoff=data["safe_payoff"],
        prior=data["prior"],
        k0=data["k0"],
        n_players=data["n_players"],
    )


def load_model(path) -> LevyModel:
    """Load and validate a model from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelValidationError(f"model file: not valid JSON ({exc})") from exc
    return model_from_dict(data)


def save_model(model: LevyModel, path) -> None:
    write_json_atomic(path, model.to_dict())


def write_json_atomic(path, payload: dict) -> None:
    """Write JSON to a temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# belief helpers and static payoff functions
# ---------------------------------------------------------------------------

def full_belief(pi) -> np.ndarray:
    """Append the implicit pi_0 = 1 - sum(pi): (..., L) -> (..., L+1)."""
    pi = np.asarray(pi, dtype=float)
    pi0 = 1.0 - pi.sum(axis=-1, keepdims=True)
    return np.concatenate([pi0, pi], axis=-1)


def clip_renormalize(pi_full: np.ndarray, tol: float = 1e-12):
    """Project near-simplex points back onto the simplex.

    Returns ``(projected, drift)`` where drift is the largest absolute
    adjustment applied.  Adjustments below ``tol`` do not count as drift.
    """
    clipped = np.maximum(pi_full, 0.0)
    total = clipped.sum(axis=-1, keepdims=True)
    projected = clipped / total
    drift = float(np.max(np.abs(projected - pi_full), initial=0.0))
    if drift <= tol:
        drift = 0.0
    return projected, drift


def state_means(model: LevyModel) -> np.ndarray:
    return model.state_means


def mean_payoff(model: LevyModel, pi) -> np.ndarray:
    """m(pi) = sum_l pi_l mu_l, the posterior mean flow payoff of the risky arm."""
    pi = np.asarray(pi, dtype=float)
    mu = model.state_means
    return mu[0] + pi @ (mu[1:] - mu[0])


def full_info_payoff(model: LevyModel, pi) -> np.ndarray:
    """f(pi) = sum_l pi_l max(s, mu_l), the full-information long-run average."""
    pi = np.asarray(pi, dtype=float)
    best = np.maximum(model.safe_payoff, model.state_means)
    return best[0] + pi @ (best[1:] - best[0])


def incentive(model: LevyModel, pi) -> np.ndarray:
    """I(pi) = (f - s)/(s - m) where m(pi) < s, and +inf where m(pi) >= s."""
    pi = np.asarray(pi, dtype=float)
    s = model.safe_payoff
    m = mean_payoff(model, pi)
    f = full_info_payoff(model, pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (f - s) / (s - m)
    return np.where(m < s, ratio, np.inf)


def simplex_grid(L: int, G: int) -> np.ndarray:
    """Regular grid on the L-simplex with step 1/G, in free coordinates.

    Returns an array of shape (n_nodes, L).  Supports L = 1 and L = 2.
    """
    if G < 1:
        raise ValueError("G must be >= 1")
    if L == 1:
        return (np.arange(G + 1, dtype=float) / G)[:, None]
    if L == 2:
        nodes = [
            (i / G, j / G)
            for i in range(G + 1)
            for j in range(G + 1 - i)
        ]
        return np.array(nodes, dtype=float)
    raise NotImplementedError("simplex_grid supports L = 1 and L = 2")

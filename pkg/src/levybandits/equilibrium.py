"""Symmetric equilibrium strategy, best responses, and strategy regularity checks.

With N players and background intensity k0, the unique symmetric Markov
perfect equilibrium under the strong long-run average criterion allocates

    kappa(pi) = 0                     if I(pi) <= k0,
                (I(pi) - k0)/(N - 1)  if k0 < I(pi) < k0 + N - 1,
                1                     if I(pi) >= k0 + N - 1,

where I is the incentive to experiment.  For N = 1 the middle branch is
empty and the rule degenerates to the threshold kappa = 1{I > k0}.

Best responses are classified through the rearranged Bellman maximand whose
k-dependence sits entirely in the denominator:

    ([k0 + (N-1) kbar] [s - m(pi)] - [f(pi) - s]) / (k0 + (N-1) kbar + k);

the sign of the numerator decides between k = 0, k = 1, and indifference.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import LevyModel, full_info_payoff, incentive, mean_payoff, simplex_grid

# knife-edge classification tolerance, scaled by the local payoff magnitudes
BR_TOL = 1e-10


class BestResponse(enum.Enum):
    ZERO = "zero"
    ONE = "one"
    ALL = "all_of_unit_interval"


def action_from_incentive(I, k0: float, n_players: int) -> np.ndarray:
    """Map incentive values to the symmetric equilibrium allocation.

    For a single player the interior branch is empty and the rule is the
    bang-bang threshold at I = k0.
    """
    I = np.asarray(I, dtype=float)
    if n_players == 1:
        return np.where(I > k0, 1.0, 0.0)
    with np.errstate(invalid="ignore"):
        mid = (I - k0) / (n_players - 1)
    return np.clip(mid, 0.0, 1.0)


def equilibrium_action(model: LevyModel, pi) -> np.ndarray:
    """Symmetric equilibrium allocation kappa(pi) to the risky arm."""
    return action_from_incentive(incentive(model, pi), model.k0, model.n_players)


def _maximand_numerator(model: LevyModel, pi, kappa_bar):
    s = model.safe_payoff
    m = mean_payoff(model, pi)
    f = full_info_payoff(model, pi)
    base = model.k0 + (model.n_players - 1) * np.asarray(kappa_bar, dtype=float)
    return base * (s - m) - (f - s), base, m, f


def hjb_maximand(model: LevyModel, pi, kappa_bar, k) -> np.ndarray:
    """k-dependent term of the rearranged Bellman maximand at belief pi.

    ``kappa_bar`` is the common allocation of the other N-1 players and ``k``
    the player's own allocation in [0, 1].
    """
    numer, base, _, _ = _maximand_numerator(model, pi, kappa_bar)
    return numer / (base + np.asarray(k, dtype=float))


def best_response_set(model: LevyModel, pi, kappa_bar) -> BestResponse:
    """Maximizer set of the Bellman maximand in own allocation k.

    Positive numerator: the term decreases in k, so k = 0.  Negative: k = 1.
    Zero (within a scaled tolerance): every k in [0, 1] is a best response.
    """
    numer, _, m, f = _maximand_numerator(model, pi, kappa_bar)
    scale = abs(model.safe_payoff - float(m)) + abs(float(f) - model.safe_payoff)
    tol = BR_TOL * scale
    n = float(numer)
    if abs(n) <= tol:
        return BestResponse.ALL
    return BestResponse.ZERO if n > 0.0 else BestResponse.ONE


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

class Strategy:
    """Markov strategy: a stationary map from beliefs to allocations in [0, 1].

    Subclasses implement ``__call__`` accepting beliefs of shape (..., L) and
    returning allocations of the leading shape.
    """

    def __call__(self, pi) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


class ClosedFormEquilibrium(Strategy):
    def __init__(self, model: LevyModel):
        self.model = model

    def __call__(self, pi) -> np.ndarray:
        return equilibrium_action(self.model, pi)

    def describe(self) -> str:
        return "equilibrium"


class ConstantStrategy(Strategy):
    def __init__(self, k: float):
        if not 0.0 <= k <= 1.0:
            raise ValueError("constant allocation must lie in [0, 1]")
        self.k = float(k)

    def __call__(self, pi) -> np.ndarray:
        pi = np.asarray(pi, dtype=float)
        return np.full(pi.shape[:-1], self.k)

    def describe(self) -> str:
        return f"constant:{self.k}"


class OffsetStrategy(Strategy):
    """Base strategy shifted by a constant offset, clamped to [0, 1]."""

    def __init__(self, base: Strategy, delta: float):
        self.base = base
        self.delta = float(delta)

    def __call__(self, pi) -> np.ndarray:
        return np.clip(self.base(pi) + self.delta, 0.0, 1.0)

    def describe(self) -> str:
        return f"offset:{self.base.describe()}{self.delta:+g}"


class ThresholdStrategy(Strategy):
    """Bang-bang in the incentive: full experimentation where I(pi) >= cut."""

    def __init__(self, model: LevyModel, cut: float):
        self.model = model
        self.cut = float(cut)

    def __call__(self, pi) -> np.ndarray:
        return np.where(incentive(self.model, pi) >= self.cut, 1.0, 0.0)

    def describe(self) -> str:
        return f"threshold:{self.cut}"


def simplex_node_table(L: int, grid_step: int, node_values):
    """Dense lookup table from per-node values in simplex_grid order.

    L = 1: the (G+1,) vector itself.  L = 2: a (G+1, G+1) array indexed by
    lattice coordinates, NaN off the simplex.
    """
    if L not in (1, 2):
        raise NotImplementedError("simplex tables support L = 1 and L = 2")
    G = int(grid_step)
    node_values = np.asarray(node_values, dtype=float).ravel()
    nodes = simplex_grid(L, G)
    if node_values.shape[0] != nodes.shape[0]:
        raise ValueError(f"need {nodes.shape[0]} node values, got {node_values.shape[0]}")
    if L == 1:
        return node_values.copy()
    table = np.full((G + 1, G + 1), np.nan)
    idx = np.rint(nodes * G).astype(int)
    table[idx[:, 0], idx[:, 1]] = node_values
    return table


def simplex_table_interp(L: int, grid_step: int, table, pi):
    """Piecewise-linear interpolation of a simplex node table.

    For L = 2 each lattice square is split along the anti-diagonal and the
    value is barycentric-linear on each triangle, so the interpolant is
    continuous and exact at the nodes.
    """
    G = int(grid_step)
    pi = np.asarray(pi, dtype=float)
    if L == 1:
        x = np.clip(pi[..., 0], 0.0, 1.0)
        return np.interp(x, np.arange(G + 1) / G, table)
    x = np.clip(pi[..., 0], 0.0, 1.0) * G
    y = np.clip(pi[..., 1], 0.0, 1.0) * G
    i = np.minimum(x.astype(int), G - 1)
    j = np.minimum(y.astype(int), G - 1)
    a = x - i
    b = y - j
    V = table
    iu = np.minimum(i + 1, G)
    ju = np.minimum(j + 1, G)
    lower = V[i, j] * (1.0 - a - b) + V[iu, j] * a + V[i, ju] * b
    upper = V[iu, ju] * (a + b - 1.0) + V[i, ju] * (1.0 - a) + V[iu, j] * (1.0 - b)
    return np.where(a + b <= 1.0, lower, upper)


class TabulatedStrategy(Strategy):
    """Allocations on a regular simplex grid, piecewise-linear in between.

    Supports L = 1 and L = 2; interpolation via simplex_table_interp.
    """

    def __init__(self, L: int, grid_step: int, values):
        if L not in (1, 2):
            raise NotImplementedError("TabulatedStrategy supports L = 1 and L = 2")
        self.L = L
        self.G = int(grid_step)
        values = np.asarray(values, dtype=float)
        if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
            raise ValueError("tabulated allocations must lie in [0, 1]")
        if L == 1 and values.shape != (self.G + 1,):
            raise ValueError(f"need {self.G + 1} node values, got {values.shape}")
        self.values = simplex_node_table(L, self.G, values)

    @classmethod
    def from_function(cls, L: int, grid_step: int, fn) -> "TabulatedStrategy":
        nodes = simplex_grid(L, grid_step)
        return cls(L, grid_step, np.asarray(fn(nodes), dtype=float))

    def __call__(self, pi) -> np.ndarray:
        out = simplex_table_interp(self.L, self.G, self.values, pi)
        return np.clip(out, 0.0, 1.0)

    def describe(self) -> str:
        return f"tabulated:G={self.G}"


# ---------------------------------------------------------------------------
# regularity checks
# ---------------------------------------------------------------------------

def _face_points(model: LevyModel, dominant: bool, grid: int) -> np.ndarray:
    """Grid points (full coordinates) of the face where the risky arm is
    dominant (all mass on states with mu > s) or dominated (mu < s)."""
    mu = model.state_means
    s = model.safe_payoff
    keep = (mu > s) if dominant else (mu < s)
    keep_idx = np.flatnonzero(keep)
    d = keep_idx.size
    if d == 0:
        return np.empty((0, model.n_states))
    points = []
    if d == 1:
        weights = np.ones((1, 1))
    else:
        weights = np.array(
            [
                [i / grid for i in combo] + [1.0 - sum(combo) / grid]
                for combo in _compositions(grid, d - 1)
            ]
        )
    for w in weights:
        p = np.zeros(model.n_states)
        p[keep_idx] = w
        points.append(p)
    return np.array(points)


def _compositions(total: int, parts: int):
    if parts == 0:
        yield ()
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def is_reasonable(model: LevyModel, strategy: Strategy, offsets=(1e-3, 1e-2),
                  face_grid: int = 8, n_directions: int = 5, seed: int = 0):
    """Check the reasonableness property of a strategy.

    A reasonable strategy plays 1 on an open neighborhood of the face where
    the risky arm dominates and 0 on a neighborhood of the face where it is
    dominated.  Samples points at small simplex offsets from both faces;
    returns ``(True, None)`` or ``(False, witness_belief)`` with the witness
    in free coordinates.
    """
    rng = np.random.default_rng(seed)
    for dominant, target in ((True, 1.0), (False, 0.0)):
        face = _face_points(model, dominant, face_grid)
        if face.shape[0] == 0:
            continue
        directions = rng.dirichlet(np.ones(model.n_states), size=n_directions)
        for eps in offsets:
            for q in face:
                pts_full = (1.0 - eps) * q[None, :] + eps * directions
                pts = pts_full[:, 1:]
                acts = np.asarray(strategy(pts), dtype=float)
                bad = np.flatnonzero(acts != target)
                if bad.size:
                    return False, pts[bad[0]].copy()
    return True, None


def lipschitz_estimate(strategy: Strategy, L: int, grid_step: int) -> float:
    """Largest |d kappa| / |d pi| over nearest-neighbor pairs of a regular grid.

    Euclidean norm on the free coordinates.  A numeric lower bound on the
    true Lipschitz constant; it stabilizes under grid refinement for
    Lipschitz strategies and blows up for discontinuous ones.
    """
    G = grid_step
    h = 1.0 / G
    if L == 1:
        pts = simplex_grid(1, G)
        vals = np.asarray(strategy(pts), dtype=float)
        return float(np.max(np.abs(np.diff(vals))) / h)
    if L != 2:
        raise NotImplementedError("lipschitz_estimate supports L = 1 and L = 2")
    best = 0.0
    # evaluate on the dense lattice once, then compare lattice neighbors
    table = np.full((G + 1, G + 1), np.nan)
    nodes = simplex_grid(2, G)
    vals = np.asarray(strategy(nodes), dtype=float)
    idx = np.rint(nodes * G).astype(int)
    table[idx[:, 0], idx[:, 1]] = vals
    with np.errstate(invalid="ignore"):
        for di, dj, dist in ((1, 0, h), (0, 1, h), (1, -1, h * np.sqrt(2.0))):
            a = table[max(0, -di): G + 1 - max(0, di), max(0, -dj): G + 1 - max(0, dj)]
            b = table[max(0, di): G + 1 - max(0, -di), max(0, dj): G + 1 - max(0, -dj)]
            diff = np.abs(a - b) / dist
            if np.any(~np.isnan(diff)):
                best = max(best, float(np.nanmax(diff)))
    return best

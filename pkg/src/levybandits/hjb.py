"""Numerical verification of the equilibrium Bellman characterization.

The closed-form profile is checked against a simulated value field: grid-node
estimates of the expected total shortfall under symmetric play, with vertex
values pinned to their exact zero.  At interior nodes the stationarity
condition

    0 = max_k [ (1-k) s + k m(pi) - f(pi) + (k0 + (N-1) kappa(pi) + k) Gu(pi) ]

is evaluated with Gu assembled by the filtering generator from grid-stencil
derivatives (central differences one grid cell wide) and exact Bayes-jump
destinations interpolated on the field.

Because every node is simulated on common random numbers, stencil
combinations of node values are paired statistics: their uncertainty is the
standard error of the per-path combination, not the independent-error sum,
which keeps the residual tolerance tight enough to be informative.  Nodes
whose stencil straddles an allocation regime boundary see a kinked field and
are reported as skipped rather than tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import (
    BestResponse,
    ClosedFormEquilibrium,
    best_response_set,
    equilibrium_action,
    simplex_node_table,
    simplex_table_interp,
)
from .filtering import apply_generator, generator_stencil
from .model import LevyModel, full_belief, full_info_payoff, incentive, mean_payoff, simplex_grid
from .montecarlo import RunSpec, SimConfig, _simulate_runs, estimate_lra_payoff

VERTEX_EPS = 1e-12


@dataclass
class ValueField:
    """Monte Carlo value field of a symmetric profile on a simplex grid.

    ``values`` are expected total shortfalls (0 exactly at vertices, negative
    inside), ``se`` their standard errors, ``tail`` the fitted magnitude of
    the truncated [T, inf) remainder.  ``path_values`` keeps the per-path
    shortfall of every node (vertices as exact-zero rows) so that linear
    combinations across nodes inherit the common-random-number pairing.
    """

    L: int
    grid_step: int
    nodes: np.ndarray        # (n, L) free coordinates
    values: np.ndarray       # (n,)
    se: np.ndarray           # (n,)
    tail: np.ndarray         # (n,)
    is_vertex: np.ndarray    # (n,) bool
    path_values: np.ndarray  # (n, n_paths)
    config: SimConfig
    strategy_label: str

    def __post_init__(self):
        self._table = simplex_node_table(self.L, self.grid_step, self.values)
        self._se_table = simplex_node_table(self.L, self.grid_step, self.se)
        if self.L == 1:
            self._index = {(int(round(x[0] * self.grid_step)),): i
                           for i, x in enumerate(self.nodes)}
        else:
            self._index = {
                (int(round(x[0] * self.grid_step)), int(round(x[1] * self.grid_step))): i
                for i, x in enumerate(self.nodes)
            }

    @property
    def n_paths(self) -> int:
        return self.path_values.shape[1]

    def interpolate(self, pi) -> np.ndarray:
        return simplex_table_interp(self.L, self.grid_step, self._table, pi)

    def se_interpolate(self, pi) -> np.ndarray:
        return simplex_table_interp(self.L, self.grid_step, self._se_table, pi)

    def node_id(self, latt) -> int:
        try:
            return self._index[tuple(int(v) for v in latt)]
        except KeyError:
            raise ValueError(f"lattice point {latt} is not a field node") from None

    def interp_weights(self, pi):
        """Node ids and convex weights reproducing ``interpolate`` at pi."""
        pi = np.asarray(pi, dtype=float)
        G = self.grid_step
        if self.L == 1:
            x = float(np.clip(pi[0], 0.0, 1.0)) * G
            i = min(int(x), G - 1)
            a = x - i
            return [self.node_id((i,)), self.node_id((i + 1,))], np.array([1.0 - a, a])
        x = float(np.clip(pi[0], 0.0, 1.0)) * G
        y = float(np.clip(pi[1], 0.0, 1.0)) * G
        i = min(int(x), G - 1)
        j = min(int(y), G - 1)
        a, b = x - i, y - j
        if a + b <= 1.0:
            ids = [(i, j), (i + 1, j), (i, j + 1)]
            w = np.array([1.0 - a - b, a, b])
        else:
            ids = [(i + 1, j + 1), (i, j + 1), (i + 1, j)]
            w = np.array([a + b - 1.0, 1.0 - a, 1.0 - b])
        return [self.node_id(t) for t in ids], w


def _vertex_mask(nodes: np.ndarray) -> np.ndarray:
    pf = full_belief(nodes)
    return pf.max(axis=-1) >= 1.0 - VERTEX_EPS


def build_value_field(model: LevyModel, config: SimConfig, grid_step: int,
                      strategy=None) -> ValueField:
    """Estimate the symmetric-profile value at every simplex grid node.

    Vertices are absorbing with zero shortfall and are set exactly; interior
    and face nodes are simulated jointly on common random numbers.
    """
    if model.L not in (1, 2):
        raise NotImplementedError("value fields support L = 1 and L = 2")
    strategy = strategy if strategy is not None else ClosedFormEquilibrium(model)
    profile = tuple([strategy] * model.n_players)
    nodes = simplex_grid(model.L, grid_step)
    vertex = _vertex_mask(nodes)

    runs = [RunSpec(profile=profile, init_belief=nodes[i], label=f"node {i}")
            for i in np.flatnonzero(~vertex)]
    ensembles = _simulate_runs(model, runs, config)

    n = nodes.shape[0]
    values = np.zeros(n)
    se = np.zeros(n)
    tail = np.zeros(n)
    path_values = np.zeros((n, config.n_paths))
    for run_i, node_i in enumerate(np.flatnonzero(~vertex)):
        ens = ensembles[run_i]
        est = estimate_lra_payoff(ens, player=0)
        values[node_i] = est.value
        se[node_i] = est.se
        tail[node_i] = est.tail_bound if np.isfinite(est.tail_bound) else 0.0
        path_values[node_i] = ens.shortfall[:, 0]
    return ValueField(
        L=model.L,
        grid_step=grid_step,
        nodes=nodes,
        values=values,
        se=se,
        tail=tail,
        is_vertex=vertex,
        path_values=path_values,
        config=config,
        strategy_label=strategy.describe(),
    )


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeResidual:
    """Stationarity-equation residual at one interior grid node."""

    pi: tuple
    residual: float          # maximand at the equilibrium action
    uncertainty: float       # paired-path standard error of the residual
    bias: float              # truncation-tail allowance
    smooth: bool             # no allocation-regime boundary in the stencil
    eq_action: float
    gen_value: float         # generator applied to the field
    gen_closed_form: float   # generator from the rearranged stationarity identity
    max_residual: float      # max of the maximand over the k grid
    argmax_actions: tuple    # k-grid maximizers (within tolerance)
    response: BestResponse
    argmax_consistent: bool

    @property
    def passes(self) -> bool:
        return abs(self.residual) <= 3.0 * self.uncertainty + self.bias


def _regime(model: LevyModel, pi) -> int:
    i_val = incentive(model, pi)
    if i_val <= model.k0:
        return 0
    if i_val >= model.k0 + model.n_players - 1:
        return 2
    return 1


def _stencil_coefficients(field: ValueField, model: LevyModel, latt):
    """Derivative stencils and their node-coefficient map at a lattice point.

    Returns (grad, hess, coeffs) where coeffs maps node id -> weight of that
    node's value in the diffusion + drift part of the generator.
    """
    G = field.grid_step
    h = 1.0 / G
    L = field.L
    pi = np.asarray(latt, dtype=float) / G
    st = generator_stencil(model, pi)
    coeffs: dict[int, float] = {}

    def add(latt_pt, c):
        if c != 0.0:
            nid = field.node_id(latt_pt)
            coeffs[nid] = coeffs.get(nid, 0.0) + c

    v = field._table
    if L == 1:
        (i,) = latt
        grad = np.array([(v[i + 1] - v[i - 1]) / (2 * h)])
        hess = np.array([[(v[i + 1] - 2 * v[i] + v[i - 1]) / h**2]])
        D = st.diffusion[0, 0]
        b = st.drift[0]
        add((i + 1,), 0.5 * D / h**2 + b / (2 * h))
        add((i - 1,), 0.5 * D / h**2 - b / (2 * h))
        add((i,), -D / h**2)
        return grad, hess, coeffs

    i, j = latt
    g1 = (v[i + 1, j] - v[i - 1, j]) / (2 * h)
    g2 = (v[i, j + 1] - v[i, j - 1]) / (2 * h)
    h11 = (v[i + 1, j] - 2 * v[i, j] + v[i - 1, j]) / h**2
    h22 = (v[i, j + 1] - 2 * v[i, j] + v[i, j - 1]) / h**2
    # mixed derivative from the hexagonal neighbors, which stay on the simplex
    h12 = (
        v[i + 1, j] + v[i - 1, j] + v[i, j + 1] + v[i, j - 1]
        - v[i + 1, j - 1] - v[i - 1, j + 1] - 2 * v[i, j]
    ) / (2 * h**2)
    grad = np.array([g1, g2])
    hess = np.array([[h11, h12], [h12, h22]])

    D = st.diffusion
    b = st.drift
    c_mixed = 0.5 * 2 * D[0, 1] / (2 * h**2)  # weight of each hexagonal term
    add((i + 1, j), 0.5 * D[0, 0] / h**2 + b[0] / (2 * h) + c_mixed)
    add((i - 1, j), 0.5 * D[0, 0] / h**2 - b[0] / (2 * h) + c_mixed)
    add((i, j + 1), 0.5 * D[1, 1] / h**2 + b[1] / (2 * h) + c_mixed)
    add((i, j - 1), 0.5 * D[1, 1] / h**2 - b[1] / (2 * h) + c_mixed)
    add((i + 1, j - 1), -c_mixed)
    add((i - 1, j + 1), -c_mixed)
    add((i, j), -(D[0, 0] + D[1, 1]) / h**2 - 2 * c_mixed)
    return grad, hess, coeffs


def _interior_lattice(field: ValueField):
    G = field.grid_step
    if field.L == 1:
        return [(i,) for i in range(1, G)]
    return [(i, j) for i in range(1, G) for j in range(1, G - i)]


def _stencil_neighbors(L: int, latt):
    if L == 1:
        (i,) = latt
        return [(i - 1,), (i + 1,)]
    i, j = latt
    return [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1), (i + 1, j - 1), (i - 1, j + 1)]


def hjb_residual(field: ValueField, model: LevyModel, pi, k_grid: int = 21) -> NodeResidual:
    """Stationarity residual and paired uncertainty at one interior grid node.

    ``pi`` must be an interior lattice node of the field with a full stencil.
    """
    pi = np.asarray(pi, dtype=float)
    G = field.grid_step
    latt = tuple(int(round(x * G)) for x in pi)
    if not np.allclose(np.asarray(latt, dtype=float) / G, pi, atol=1e-9):
        raise ValueError("pi is not a grid node of the value field")
    if latt not in set(_interior_lattice(field)):
        raise ValueError("stencil out of domain: pi must be an interior grid node")

    kappa = float(equilibrium_action(model, pi))
    m = float(mean_payoff(model, pi))
    f = float(full_info_payoff(model, pi))
    s = model.safe_payoff
    N = model.n_players

    grad, hess, coeffs = _stencil_coefficients(field, model, latt)
    gen = apply_generator(
        model, field.interpolate, pi, grad=lambda _: grad, hess=lambda _: hess
    )

    # per-path pairing of the whole linear combination behind the residual
    st = generator_stencil(model, pi)
    combo = dict(coeffs)
    nid0 = field.node_id(latt)
    for a in range(st.jump_rates.size):
        rate = float(st.jump_rates[a])
        if rate <= 0.0:
            continue
        ids, w = field.interp_weights(st.jump_destinations[a])
        for nid, wt in zip(ids, w):
            combo[nid] = combo.get(nid, 0.0) + rate * wt
        combo[nid0] = combo.get(nid0, 0.0) - rate
    ids = np.array(sorted(combo))
    cvec = np.array([combo[n] for n in ids])
    per_path = cvec @ field.path_values[ids]
    n_paths = per_path.shape[0]
    gen_se = float(per_path.std(ddof=1) / np.sqrt(n_paths))
    gen_bias = float(np.abs(cvec) @ field.tail[ids])

    q_eq = model.k0 + (N - 1) * kappa + kappa
    residual = (1.0 - kappa) * s + kappa * m - f + q_eq * gen
    uncertainty = q_eq * gen_se
    bias = q_eq * gen_bias
    gen_closed = (f - (1.0 - kappa) * s - kappa * m) / q_eq

    ks = np.linspace(0.0, 1.0, k_grid)
    vals = (1.0 - ks) * s + ks * m - f + (model.k0 + (N - 1) * kappa + ks) * gen
    vmax = float(vals.max())
    scale = abs(s - m) + abs(f - s) + abs(gen)
    tol_k = max(3.0 * gen_se, 1e-12 * scale)
    argmax = tuple(float(k) for k, val in zip(ks, vals) if vmax - val <= tol_k)

    response = best_response_set(model, pi, kappa)
    if response is BestResponse.ALL:
        consistent = True
    elif response is BestResponse.ZERO:
        consistent = 0.0 in argmax
    else:
        consistent = 1.0 in argmax

    regimes = {_regime(model, np.asarray(nb, dtype=float) / G)
               for nb in _stencil_neighbors(field.L, latt)}
    regimes.add(_regime(model, pi))
    smooth = len(regimes) == 1

    return NodeResidual(
        pi=tuple(float(x) for x in pi),
        residual=float(residual),
        uncertainty=float(uncertainty),
        bias=float(bias),
        smooth=smooth,
        eq_action=kappa,
        gen_value=float(gen),
        gen_closed_form=float(gen_closed),
        max_residual=vmax,
        argmax_actions=argmax,
        response=response,
        argmax_consistent=bool(consistent),
    )


@dataclass(frozen=True)
class ResidualReport:
    """Field-wide summary of stationarity residuals at smooth interior nodes."""

    grid_step: int
    n_paths: int
    n_interior: int
    n_smooth: int
    n_pass: int
    pass_fraction: float
    median_abs_residual: float
    argmax_consistent: bool
    skipped_kink_nodes: int
    nodes: tuple  # NodeResidual records for smooth nodes

    @property
    def passes(self) -> bool:
        return self.pass_fraction >= 0.9 and self.argmax_consistent


def hjb_residual_report(field: ValueField, model: LevyModel, k_grid: int = 21) -> ResidualReport:
    """Evaluate the stationarity residual at every smooth interior node."""
    records = []
    skipped = 0
    lattice = _interior_lattice(field)
    for latt in lattice:
        res = hjb_residual(field, model, np.asarray(latt, dtype=float) / field.grid_step,
                           k_grid=k_grid)
        if res.smooth:
            records.append(res)
        else:
            skipped += 1
    n_smooth = len(records)
    n_pass = sum(r.passes for r in records)
    med = float(np.median([abs(r.residual) for r in records])) if records else 0.0
    return ResidualReport(
        grid_step=field.grid_step,
        n_paths=field.n_paths,
        n_interior=len(lattice),
        n_smooth=n_smooth,
        n_pass=n_pass,
        pass_fraction=n_pass / n_smooth if n_smooth else 1.0,
        median_abs_residual=med,
        argmax_consistent=all(r.argmax_consistent for r in records) if records else True,
        skipped_kink_nodes=skipped,
        nodes=tuple(records),
    )


# ---------------------------------------------------------------------------
# boundary behavior
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeCheck:
    """Vertex-approach behavior of the estimated value along one domain edge."""

    states: tuple            # the two states spanned by the edge
    kind: str                # "mixed" | "safe" | "dominant"
    values: np.ndarray
    se: np.ndarray
    monotone_into_vertices: bool
    interior_negative: bool  # some interior node below -3 se


@dataclass(frozen=True)
class VertexReport:
    vertices_zero: bool
    edges: tuple

    @property
    def passes(self) -> bool:
        return self.vertices_zero and all(e.monotone_into_vertices for e in self.edges)


def _edge_lattices(L: int, G: int):
    """Node sequences along each 1-face, with the pair of spanned states."""
    if L == 1:
        return [((0, 1), [(i,) for i in range(G + 1)])]
    return [
        ((0, 1), [(i, 0) for i in range(G + 1)]),
        ((0, 2), [(0, j) for j in range(G + 1)]),
        ((1, 2), [(G - j, j) for j in range(G + 1)]),
    ]


def _monotone_toward_ends(mag: np.ndarray, slack: np.ndarray) -> bool:
    """True when |u| decays into both endpoints from its interior peak."""
    peak = int(np.argmax(mag))
    left = all(mag[t] <= mag[t + 1] + slack[t] for t in range(0, peak))
    right = all(mag[t + 1] <= mag[t] + slack[t] for t in range(peak, mag.size - 1))
    return left and right


def vertex_boundary_check(field: ValueField, model: LevyModel) -> VertexReport:
    """Exact zeros at vertices; decay of |u| into the vertices along edges."""
    vertices_zero = bool(
        np.all(field.values[field.is_vertex] == 0.0)
        and np.all(field.se[field.is_vertex] == 0.0)
    )
    mu = model.state_means
    s = model.safe_payoff
    edges = []
    for states, latts in _edge_lattices(field.L, field.grid_step):
        ids = np.array([field.node_id(t) for t in latts])
        vals = field.values[ids]
        ses = field.se[ids]
        mus = mu[list(states)]
        if np.all(mus < s):
            kind = "safe"
        elif np.all(mus > s):
            kind = "dominant"
        else:
            kind = "mixed"
        slack = 3.0 * (ses[:-1] + ses[1:])
        edges.append(
            EdgeCheck(
                states=states,
                kind=kind,
                values=vals,
                se=ses,
                monotone_into_vertices=_monotone_toward_ends(np.abs(vals), slack),
                interior_negative=bool(np.any(vals[1:-1] < -3.0 * ses[1:-1])),
            )
        )
    return VertexReport(vertices_zero=vertices_zero, edges=tuple(edges))

"""Closed-form figure data: experimentation regions and level curves.

All outputs here are deterministic evaluations of the equilibrium allocation;
no Monte Carlo is involved.  Level curves of the allocation are loci of the
incentive statistic (allocation level c corresponds to incentive
k0 + (N-1) c), extracted by marching squares on a regular grid with every
crossing point refined by root finding along its grid edge, so emitted points
satisfy |incentive - target| well below the 1e-6 tolerance.

The incentive is infinite where the belief-mean payoff reaches the safe
payoff; root finding therefore runs on the monotone compression v/(1+|v|),
which is finite everywhere.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, ndtr

from .equilibrium import action_from_incentive, equilibrium_action
from .model import LevyModel, incentive

CONTOUR_TOL = 1e-6


def _compress(v):
    """Monotone map of the extended line onto [-1, 1]: v / (1 + |v|)."""
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(v), np.sign(v), v / (1.0 + np.abs(v)))
    return np.where(np.isnan(v), np.nan, out)


# ---------------------------------------------------------------------------
# marching squares with root-refined crossings
# ---------------------------------------------------------------------------

def _edge_point(fn, level_c, p0, p1, f0, f1):
    """Root of compress(fn) - level_c on the segment p0-p1 (f0, f1 bracket).

    Endpoint values are pinned to the cached grid values rather than
    re-evaluated: vectorized grid evaluation and pointwise re-evaluation can
    disagree by a few ulp (different BLAS kernels), which would break the
    bracket when a corner sits within rounding of the level.
    """
    g0, g1 = f0 - level_c, f1 - level_c
    if g0 == 0.0:
        return p0.copy()
    if g1 == 0.0:
        return p1.copy()

    def g(t):
        if t == 0.0:
            return g0
        if t == 1.0:
            return g1
        q = p0 + t * (p1 - p0)
        return float(_compress(fn(q[None, :]))[0]) - level_c

    t = brentq(g, 0.0, 1.0, xtol=1e-13, rtol=8.9e-16)
    return p0 + t * (p1 - p0)


# per marching-squares case: crossed edge pairs (edges 0=bottom,1=right,2=top,3=left;
# corner bits 1=bottom-left, 2=bottom-right, 4=top-right, 8=top-left)
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)],
    11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
}


def extract_contours(fn, xs, ys, level, field=None):
    """Polylines of fn = level over the rectangle spanned by xs, ys.

    ``fn`` maps an (n, 2) array of points to n field values (may be inf or
    NaN; NaN cells are skipped).  Returns a list of (k, 2) arrays.  Crossing
    points are refined along grid edges to the compressed-field root.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if field is None:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        field = np.asarray(fn(pts), dtype=float).reshape(X.shape)
    C = _compress(field)
    lc = float(_compress(level))

    nx, ny = len(xs), len(ys)
    pos = C > lc

    # crossing point cache keyed by (i, j, orientation); orientation 0 along x
    cache: dict[tuple, np.ndarray] = {}

    def crossing(i, j, horiz):
        key = (i, j, horiz)
        if key not in cache:
            if horiz:
                p0 = np.array([xs[i], ys[j]])
                p1 = np.array([xs[i + 1], ys[j]])
                f0, f1 = C[i, j], C[i + 1, j]
            else:
                p0 = np.array([xs[i], ys[j]])
                p1 = np.array([xs[i], ys[j + 1]])
                f0, f1 = C[i, j], C[i, j + 1]
            cache[key] = _edge_point(fn, lc, p0, p1, f0, f1)
        return cache[key]

    def edge_key(i, j, e):
        if e == 0:
            return (i, j, True)
        if e == 1:
            return (i + 1, j, False)
        if e == 2:
            return (i, j + 1, True)
        return (i, j, False)

    # vectorized cell classification; only contour-crossing cells hit Python
    valid = ~(
        np.isnan(C[:-1, :-1]) | np.isnan(C[1:, :-1])
        | np.isnan(C[1:, 1:]) | np.isnan(C[:-1, 1:])
    )
    idx_grid = (
        pos[:-1, :-1].astype(int)
        + 2 * pos[1:, :-1]
        + 4 * pos[1:, 1:]
        + 8 * pos[:-1, 1:]
    )
    active = valid & (idx_grid != 0) & (idx_grid != 15)

    segments = []
    for i, j in np.argwhere(active):
        idx = int(idx_grid[i, j])
        if idx in (5, 10):
            # saddle: disambiguate with the cell-center value
            center = np.array([[0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]])
            chigh = float(_compress(fn(center))[0]) > lc
            if idx == 5:
                pairs = [(0, 1), (2, 3)] if chigh else [(3, 0), (1, 2)]
            else:
                pairs = [(3, 0), (1, 2)] if chigh else [(0, 1), (2, 3)]
        else:
            pairs = _CASES[idx]
        for ea, eb in pairs:
            ka, kb = edge_key(i, j, ea), edge_key(i, j, eb)
            pa = crossing(*ka)
            pb = crossing(*kb)
            segments.append((ka, kb, pa, pb))

    return _chain_segments(segments)


def _chain_segments(segments):
    """Join cell segments sharing grid-edge endpoints into polylines."""
    adjacency: dict[tuple, list[int]] = {}
    for si, (ka, kb, _, _) in enumerate(segments):
        adjacency.setdefault(ka, []).append(si)
        adjacency.setdefault(kb, []).append(si)

    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        ka, kb, pa, pb = segments[start]
        used[start] = True
        keys = [ka, kb]
        pts = [pa, pb]
        # extend forward then backward
        for end in (1, 0):
            while True:
                k_end = keys[-1] if end else keys[0]
                nxt = [si for si in adjacency.get(k_end, []) if not used[si]]
                if not nxt:
                    break
                si = nxt[0]
                used[si] = True
                na, nb, qa, qb = segments[si]
                if na == k_end:
                    new_key, new_pt = nb, qb
                else:
                    new_key, new_pt = na, qa
                if end:
                    keys.append(new_key)
                    pts.append(new_pt)
                else:
                    keys.insert(0, new_key)
                    pts.insert(0, new_pt)
        polylines.append(np.asarray(pts))
    return polylines


# ---------------------------------------------------------------------------
# discrete-model figures (belief simplex)
# ---------------------------------------------------------------------------

def incentive_targets(k0: float, n_players: int, kappa_levels) -> dict:
    """Incentive value whose locus is each allocation level curve."""
    return {float(c): k0 + (n_players - 1) * float(c) for c in kappa_levels}


def simplex_region_figure(model: LevyModel, grid_step: int = 200,
                          kappa_levels=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0)) -> dict:
    """Allocation level curves of an L = 2 model on the belief simplex.

    Returns per-level polylines in free coordinates (pi1, pi2), the worst
    |incentive - target| over all emitted points, and the allocation grid.
    """
    if model.L != 2:
        raise ValueError("simplex figures need a three-state model (L = 2)")
    xs = np.arange(grid_step + 1) / grid_step
    ys = xs.copy()

    def I_fn(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.full(pts.shape[0], np.nan)
        ok = pts.sum(axis=1) <= 1.0 + 1e-12
        if np.any(ok):
            out[ok] = incentive(model, np.clip(pts[ok], 0.0, 1.0))
        return out

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    I_field = I_fn(pts).reshape(X.shape)
    kappa_field = np.where(
        np.isnan(I_field), np.nan,
        action_from_incentive(np.nan_to_num(I_field, posinf=np.inf),
                              model.k0, model.n_players),
    )

    targets = incentive_targets(model.k0, model.n_players, kappa_levels)
    curves = {}
    max_dev = 0.0
    for c, target in targets.items():
        polylines = extract_contours(I_fn, xs, ys, target, field=I_field)
        for poly in polylines:
            vals = incentive(model, poly)
            max_dev = max(max_dev, float(np.max(np.abs(vals - target))) if vals.size else 0.0)
        curves[c] = polylines
    return {
        "kind": "simplex_regions",
        "grid_step": grid_step,
        "kappa_levels": list(targets),
        "incentive_targets": targets,
        "curves": curves,
        "max_incentive_deviation": max_dev,
        "grid_pi1": xs,
        "grid_pi2": ys,
        "kappa_grid": kappa_field,
    }


def diagonal_slice_figure(model: LevyModel, n_list=(2, 4, 6, 8, 10),
                          grid_step: int = 400) -> dict:
    """Equilibrium allocation along the equal-weights slice pi1 = pi2 = p.

    The allocation depends on the player count only through the interior
    ramp; the p where experimentation starts (incentive = k0) is shared, and
    is returned as an exact root.
    """
    if model.L != 2:
        raise ValueError("diagonal slices need a three-state model (L = 2)")
    p = np.arange(grid_step + 1) / (2.0 * grid_step)  # p in [0, 1/2]
    beliefs = np.column_stack([p, p])
    I_vals = incentive(model, beliefs)
    curves = {}
    for n in n_list:
        curves[int(n)] = action_from_incentive(I_vals, model.k0, int(n))

    k0_c = float(_compress(model.k0))

    def root_fn(x):
        return float(_compress(incentive(model, np.array([x, x])))) - k0_c

    c_vals = _compress(I_vals)
    hi_idx = np.flatnonzero(c_vals > k0_c)
    threshold = None
    if hi_idx.size and hi_idx[0] > 0:
        lo_candidates = np.flatnonzero(c_vals[: hi_idx[0]] < k0_c)
        if lo_candidates.size:
            threshold = brentq(root_fn, p[lo_candidates[-1]], p[hi_idx[0]], xtol=1e-13)
    return {
        "kind": "diagonal_slice",
        "p": p,
        "incentive": I_vals,
        "curves": curves,
        "n_list": [int(n) for n in n_list],
        "threshold": threshold,
    }


# ---------------------------------------------------------------------------
# conjugate-model figures ((mean, variance) plane)
# ---------------------------------------------------------------------------

def _normal_incentive_grid(means, variances, s):
    M, V = np.meshgrid(means, variances, indexing="ij")
    tau = 1.0 / V
    z = (s - M) * np.sqrt(tau)
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        shape = ndtr(z) - 1.0 + phi / z
    return np.where(M >= s, np.inf, shape)


def _gamma_incentive_grid(means, variances, s):
    M, V = np.meshgrid(means, variances, indexing="ij")
    alpha = M * M / V
    beta = alpha / M
    G0 = gammainc(alpha, beta * s)
    G1 = gammainc(alpha + 1.0, beta * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        I = (s * G0 - M * G1) / (s - M) - 1.0
    return np.where(M >= s, np.inf, I)


def mean_variance_figure(kind: str, s: float, n_players: int, k0: float,
                         means=None, variances=None,
                         kappa_levels=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0)) -> dict:
    """Allocation level curves of a conjugate model on the (mean, variance) plane."""
    if kind not in ("normal", "gamma"):
        raise ValueError("kind must be 'normal' or 'gamma'")
    if means is None:
        means = np.linspace(0.5 if kind == "gamma" else s - 6.0, s + 4.0, 201)
    if variances is None:
        variances = np.linspace(0.05, 20.0, 200)
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    grid_fn = _normal_incentive_grid if kind == "normal" else _gamma_incentive_grid
    I_field = grid_fn(means, variances, s)
    kappa_field = action_from_incentive(I_field, k0, n_players)

    def I_fn(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty(pts.shape[0])
        for r, (mval, vval) in enumerate(pts):
            out[r] = grid_fn(np.array([mval]), np.array([vval]), s)[0, 0]
        return out

    targets = incentive_targets(k0, n_players, kappa_levels)
    curves = {c: extract_contours(I_fn, means, variances, t, field=I_field)
              for c, t in targets.items()}
    max_dev = 0.0
    for c, polylines in curves.items():
        t = targets[c]
        for poly in polylines:
            if poly.size:
                vals = I_fn(poly)
                max_dev = max(max_dev, float(np.max(np.abs(vals - t))))
    return {
        "kind": f"{kind}_mean_variance",
        "family": kind,
        "safe_payoff": s,
        "n_players": n_players,
        "k0": k0,
        "means": means,
        "variances": variances,
        "kappa_grid": kappa_field,
        "kappa_levels": list(targets),
        "incentive_targets": targets,
        "curves": curves,
        "max_incentive_deviation": max_dev,
    }

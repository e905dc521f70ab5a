"""Closed-form figure data: contour extraction and level-curve geometry."""

import numpy as np
import pytest

import levybandits as lb
from levybandits.figures import (
    _compress,
    diagonal_slice_figure,
    extract_contours,
    incentive_targets,
    mean_variance_figure,
    simplex_region_figure,
)


def test_compress_maps_extended_line():
    v = np.array([-np.inf, -3.0, 0.0, 1.0, 3.0, np.inf, np.nan])
    c = _compress(v)
    assert c[:6] == pytest.approx([-1.0, -0.75, 0.0, 0.5, 0.75, 1.0])
    assert np.isnan(c[6])
    finite = np.linspace(-50.0, 50.0, 401)
    assert np.all(np.diff(_compress(finite)) > 0.0)  # strictly monotone


def test_incentive_targets_frozen():
    t = incentive_targets(0.2, 4, (0.0, 0.2, 0.4, 0.6, 0.8, 1.0))
    assert [t[c] for c in sorted(t)] == pytest.approx([0.2, 0.8, 1.4, 2.0, 2.6, 3.2])


def test_extract_contours_circle():
    fn = lambda pts: pts[:, 0] ** 2 + pts[:, 1] ** 2
    xs = np.linspace(-1.0, 1.0, 81)
    curves = extract_contours(fn, xs, xs, 0.25)
    assert len(curves) == 1
    poly = curves[0]
    r = np.hypot(poly[:, 0], poly[:, 1])
    assert np.max(np.abs(r - 0.5)) < 1e-10  # refined to the root along each edge
    assert np.allclose(poly[0], poly[-1])   # closed loop
    assert poly.shape[0] > 100


def test_extract_contours_hyperbola_saddle():
    # level sets of x*y near 0 must not connect through the saddle cell
    fn = lambda pts: pts[:, 0] * pts[:, 1]
    xs = np.linspace(-1.0, 1.0, 41)  # grid node at the origin
    curves = extract_contours(fn, xs, xs, 0.02)
    assert len(curves) == 2  # one branch per quadrant of x y > 0
    for poly in curves:
        vals = poly[:, 0] * poly[:, 1]
        assert np.max(np.abs(vals - 0.02)) < 1e-10
        signs = np.sign(poly[:, 0])
        assert np.all(signs == signs[0])  # stays in one quadrant


def test_extract_contours_skips_nan_region():
    def fn(pts):
        out = pts[:, 0].copy()
        out[pts[:, 1] > 0.5] = np.nan
        return out

    xs = np.linspace(0.0, 1.0, 21)
    curves = extract_contours(fn, xs, xs, 0.35)
    assert curves
    for poly in curves:
        assert np.all(poly[:, 1] <= 0.55)
        assert np.max(np.abs(poly[:, 0] - 0.35)) < 1e-12


def test_extract_contours_level_hits_grid_nodes_exactly():
    # corner values equal to the level must not break the edge root finder
    fn = lambda pts: pts[:, 0]
    xs = np.linspace(0.0, 1.0, 11)
    curves = extract_contours(fn, xs, xs, 0.3)  # level exactly on a grid line
    assert curves
    pts = np.vstack(curves)
    assert np.max(np.abs(pts[:, 0] - 0.3)) < 1e-12


def test_simplex_region_figure_small_grid(three_state):
    fig = simplex_region_figure(three_state, grid_step=60)
    assert fig["max_incentive_deviation"] < 1e-6
    for level in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        polys = fig["curves"][level]
        assert polys, f"level {level} produced no curve"
        for poly in polys:
            assert np.all(poly >= -1e-12)
            assert np.all(poly.sum(axis=1) <= 1.0 + 1e-9)


def test_region_containment_under_lower_safe_payoff(three_state):
    low_s = lb.make_model(states=[(2.0, []), (5.0, []), (8.0, [])], sigma=1.0,
                          safe_payoff=4.0, prior=[1 / 3, 1 / 3, 1 / 3],
                          k0=0.2, n_players=4)
    hi = simplex_region_figure(three_state, grid_step=60)
    lo = simplex_region_figure(low_s, grid_step=60)
    k_hi, k_lo = hi["kappa_grid"], lo["kappa_grid"]
    valid = ~np.isnan(k_hi)
    assert np.all(k_lo[valid] >= k_hi[valid] - 1e-12)
    pos = valid & (k_hi > 0.0)
    assert np.all(k_lo[pos] > 0.0)


def test_diagonal_slice_monotone_and_shared_threshold(three_state):
    fig = diagonal_slice_figure(three_state, n_list=(2, 4, 6, 8, 10), grid_step=200)
    p = fig["p"]
    assert p[0] == 0.0 and p[-1] == pytest.approx(0.5)
    threshold = fig["threshold"]
    assert 0.0 < threshold < 0.5
    prev = None
    for n in fig["n_list"]:
        k = fig["curves"][n]
        below = p < threshold - 1e-9
        assert np.all(k[below] == 0.0)
        if prev is not None:
            interior = (prev > 0) & (prev < 1) & (k > 0) & (k < 1)
            assert np.all(k[interior] <= prev[interior] + 1e-12)
        prev = k


def test_mean_variance_figures(three_state):
    for kind in ("normal", "gamma"):
        fig = mean_variance_figure(kind, s=6.0, n_players=4, k0=0.2)
        assert fig["max_incentive_deviation"] < 1e-6
        for level, polys in fig["curves"].items():
            assert polys, f"{kind} level {level} missing"
            for poly in polys:
                assert np.all(poly[:, 1] > 0.0)  # variances stay positive

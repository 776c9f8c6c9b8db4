import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowgb.data import Dataset
from shadowgb.errors import ConfigurationError
from shadowgb.granular_ball import compute_attributes
from shadowgb.shadowing import (
    DEGENERATE_ALPHA,
    Shadow,
    ShadowedBall,
    alpha_grid,
    band_fuzziness,
    effective_radius,
    fuzziness_curve,
    membership,
    membership_from_sq_dist,
    optimal_alpha,
    shadow_map,
    smallest_positive_radius,
    uncertainty_variance,
    variance_curve,
)

from conftest import make_ds

unit = st.floats(0, 1, allow_nan=False)


def _sb(center=(0.0, 0.0), radius=1.0, alpha=0.3, sigma=1.0):
    return ShadowedBall(np.asarray(center), radius, 0, 1.0, 3, alpha, sigma)


def test_membership_values():
    sb = _sb(radius=0.2)
    assert membership(sb, [0.0, 0.0]) == 1.0
    assert membership(sb, [0.2, 0.0]) == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert membership(sb, [0.0, 0.6]) == pytest.approx(math.exp(-4.5), abs=1e-12)
    assert membership(sb, [0.2, 0.0]) == pytest.approx(0.60653, abs=1e-5)


@settings(max_examples=100)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3), st.floats(0.01, 3), st.floats(-3, 3))
def test_membership_translation_and_scale_invariance(x, r, shift):
    x = np.asarray(x[:2])
    c = np.array([0.3, -0.2])
    base = membership(_sb(c, r), x)
    assert membership(_sb(c + shift, r), x + shift) == pytest.approx(base, rel=1e-9, abs=1e-300)
    assert membership(_sb(2 * c, 2 * r), 2 * x) == pytest.approx(base, rel=1e-9, abs=1e-300)


def test_membership_decreases_with_distance():
    sb = _sb(radius=0.5)
    mus = [membership(sb, [d, 0.0]) for d in np.linspace(0, 3, 40)]
    assert all(a > b for a, b in zip(mus, mus[1:]))


@pytest.mark.parametrize("mu, expected", [(0.8, Shadow.ONE), (0.2, Shadow.ZERO), (0.7, Shadow.ONE), (0.3, Shadow.ZERO)])
def test_shadow_map_ends(mu, expected):
    assert shadow_map(_sb(alpha=0.3), mu) is expected


def test_shadow_map_band_keeps_membership():
    assert shadow_map(_sb(alpha=0.3), 0.5) == (Shadow.FUZZY, 0.5)


@given(unit, st.floats(0.001, 0.499))
def test_shadow_map_exactly_one_outcome(mu, alpha):
    out = shadow_map(_sb(alpha=alpha), mu)
    one, zero = out is Shadow.ONE, out is Shadow.ZERO
    fuzzy = isinstance(out, tuple) and out[0] is Shadow.FUZZY
    assert one + zero + fuzzy == 1


def test_uncertainty_variance_values():
    assert uncertainty_variance([0.2, 0.5, 0.9], 0.0) == 0.0
    assert uncertainty_variance([0.1, 0.9], 0.2) == pytest.approx(0.2)
    assert uncertainty_variance([0.5], 0.4) == 0.0


def test_band_fuzziness_values():
    assert band_fuzziness([0.5], 0.3) == 1.0
    assert band_fuzziness([0.0, 1.0], 0.2) == 0.0
    assert band_fuzziness([0.3, 0.7], 0.2) == pytest.approx(4 * 0.3 * 0.7 * 2)


@settings(max_examples=100)
@given(st.lists(unit, min_size=1, max_size=50))
def test_curves_are_monotone(mus):
    grid = alpha_grid(0.005)
    V, F = variance_curve(mus, grid), fuzziness_curve(mus, grid)
    assert np.all(np.diff(V) >= 0)
    assert np.all(np.diff(F) <= 0)
    # the vectorized curves agree with the scalar definitions
    for i in (0, 37, 98):
        assert V[i] == pytest.approx(uncertainty_variance(mus, grid[i]), abs=1e-12)
        assert F[i] == pytest.approx(band_fuzziness(mus, grid[i]), abs=1e-12)


def test_alpha_grid_default():
    g = alpha_grid(0.005)
    assert g.size == 99
    assert g[0] == pytest.approx(0.005) and g[-1] == pytest.approx(0.495)
    assert alpha_grid(0.1).tolist() == pytest.approx([0.1, 0.2, 0.3, 0.4])
    with pytest.raises(ConfigurationError):
        alpha_grid(0.2)
    with pytest.raises(ConfigurationError):
        alpha_grid(0.0)


def test_singleton_ball_gets_fallback():
    ds = make_ds([[0.3, 0.3]], [0], normalized=True)
    alpha, diag = optimal_alpha(compute_attributes([0], ds), ds)
    assert alpha == DEGENERATE_ALPHA == diag.chosen


def test_coincident_members_tie_to_smallest_alpha():
    ds = make_ds([[0.3, 0.3]] * 4, [0, 0, 1, 1], normalized=True)
    alpha, diag = optimal_alpha(compute_attributes(range(4), ds), ds, grid_step=0.01)
    assert alpha == pytest.approx(0.01)
    assert np.all(diag.objective_curve == 0)


def test_two_member_ball_gets_fallback():
    ds = make_ds([[0.1, 0.3], [0.7, 0.9]], [0, 0], normalized=True)
    alpha, _ = optimal_alpha(compute_attributes([0, 1], ds), ds)
    assert alpha == DEGENERATE_ALPHA


def _fine_argmin(mu, diag, step=1e-4):
    # same objective, evaluated on a finer grid with the candidate grid's normalization
    fine = step * np.arange(1, round(0.5 / step))
    V, F = variance_curve(mu, fine), fuzziness_curve(mu, fine)

    def norm(c, ref):
        lo, hi = ref.min(), ref.max()
        return np.zeros_like(c) if hi == lo else (c - lo) / (hi - lo)

    f = 0.5 * norm(V, diag.variance_curve) + 0.5 * norm(F, diag.fuzziness_curve)
    return fine[np.argmin(f)]


def test_alpha_matches_fine_scan_on_a_fixed_ball():
    rng = np.random.default_rng(7)
    X = rng.uniform(0.2, 0.6, size=(50, 3))
    ds = Dataset(X, rng.integers(0, 2, 50), 2, normalized=True)
    gb = compute_attributes(range(50), ds)
    alpha, diag = optimal_alpha(gb, ds)
    mu = membership_from_sq_dist(((X - gb.center) ** 2).sum(axis=1), 1.0, gb.radius)
    assert abs(_fine_argmin(mu, diag) - alpha) <= 0.005 + 1e-9
    assert diag.objective_curve[np.argmin(diag.objective_curve)] == diag.objective_curve.min()
    assert alpha == diag.grid[np.argmin(diag.objective_curve)]


def test_alpha_is_permutation_invariant():
    rng = np.random.default_rng(8)
    X = rng.uniform(size=(30, 2))
    ds = Dataset(X, rng.integers(0, 2, 30), 2, normalized=True)
    perm = rng.permutation(30)
    dsp = Dataset(X[perm], ds.labels[perm], 2, normalized=True)
    a, _ = optimal_alpha(compute_attributes(range(30), ds), ds)
    b, _ = optimal_alpha(compute_attributes(range(30), dsp), dsp)
    assert a == b


def test_diagnostics_csv():
    rng = np.random.default_rng(9)
    ds = Dataset(rng.uniform(size=(12, 2)), np.zeros(12, int), 2, normalized=True)
    _, diag = optimal_alpha(compute_attributes(range(12), ds), ds, grid_step=0.1)
    buf = io.StringIO()
    diag.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "alpha,V,F,f"
    assert len(lines) == 1 + 4
    assert float(lines[1].split(",")[0]) == pytest.approx(0.1)


def test_optimal_alpha_rejects_bad_weight():
    ds = make_ds([[0.1], [0.2]], [0, 1], normalized=True)
    with pytest.raises(ConfigurationError):
        optimal_alpha(compute_attributes([0, 1], ds), ds, weight=1.5)


def test_effective_radius_flooring():
    ds = make_ds([[0.1, 0.1], [0.1, 0.1], [0.5, 0.5], [0.9, 0.9]], [0, 0, 1, 1], normalized=True)
    balls = [compute_attributes([0, 1], ds), compute_attributes([2, 3], ds)]
    floor = smallest_positive_radius(balls)
    assert floor == pytest.approx(balls[1].radius)
    assert effective_radius(0.0, floor) == floor
    assert effective_radius(0.3, floor) == 0.3
    assert effective_radius(0.0, None) == 1e-6

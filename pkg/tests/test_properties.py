"""Property tests for the pure scalar operations and the projection."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ortg_lab.evaluate import r_squared, rmse
from ortg_lab.ingest import compute_ortg
from ortg_lab.optimize import FeasibleRegion, project_feasible

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(points=st.integers(min_value=0, max_value=10_000),
       poss=st.integers(min_value=1, max_value=10_000),
       k=st.integers(min_value=0, max_value=50))
def test_compute_ortg_scales_linearly(points, poss, k):
    scaled = compute_ortg(k * points, poss)
    expected = k * compute_ortg(points, poss)
    assert abs(scaled - expected) <= 1e-12 * max(1.0, abs(expected))


@given(points=st.integers(min_value=0, max_value=10_000),
       poss=st.integers(min_value=1, max_value=10_000))
def test_compute_ortg_nonnegative_and_formula(points, poss):
    value = compute_ortg(points, poss)
    assert value >= 0
    assert value == 100.0 * points / poss


@given(errors=st.lists(finite_floats, min_size=1, max_size=50))
def test_rmse_bounds(errors):
    value = rmse(errors)
    largest = max(abs(e) for e in errors)
    assert 0 <= value <= largest + 1e-9
    assert rmse([-e for e in errors]) == value


@given(scale=st.floats(min_value=1e-3, max_value=1e3),
       errors=st.lists(finite_floats, min_size=1, max_size=30))
def test_rmse_is_homogeneous(scale, errors):
    assert rmse([scale * e for e in errors]) == np.float64(
        scale
    ) * rmse(errors) or abs(
        rmse([scale * e for e in errors]) - scale * rmse(errors)
    ) <= 1e-9 * max(1.0, scale * rmse(errors))


@given(actual=st.lists(finite_floats, min_size=2, max_size=30, unique=True))
def test_r_squared_of_exact_prediction_is_one(actual):
    assume(float(np.var(np.asarray(actual))) > 0.0)
    assert r_squared(actual, list(actual)) == 1.0


@st.composite
def region_and_point(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    lower = rng.uniform(0.0, 0.3, 48)
    freq = list(range(0, 48, 6))
    lower[freq] = rng.uniform(0.0, 0.1, 8)  # keep the region nonempty
    upper = np.minimum(lower + rng.uniform(0.05, 0.5, 48), 1.0)
    freq_lower_sum = lower[freq].sum()
    cap = min(float(freq_lower_sum + rng.uniform(0.01, 0.5)), 1.0)
    region = FeasibleRegion(lower=lower, upper=upper, freq_sum_cap=cap)
    x = rng.uniform(-0.5, 1.5, 48)
    return region, x


@settings(max_examples=40, deadline=None)
@given(region_and_point())
def test_projection_is_feasible_and_idempotent(pair):
    region, x = pair
    proj = project_feasible(x, region)
    assert region.contains(proj, tol=1e-9)
    again = project_feasible(proj, region)
    assert float(np.max(np.abs(again - proj))) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(region_and_point(), st.integers(0, 2**31 - 1))
def test_projection_never_moves_feasible_points_further(pair, seed):
    """Non-expansiveness against an independently drawn feasible point."""
    region, x = pair
    rng = np.random.default_rng(seed)
    inside = project_feasible(rng.uniform(0, 1, 48), region)
    proj = project_feasible(x, region)
    assert np.linalg.norm(proj - inside) <= np.linalg.norm(x - inside) + 1e-9

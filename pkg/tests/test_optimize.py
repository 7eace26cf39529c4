import itertools

import numpy as np
import pytest

from ortg_lab.features import FEATURE_NAMES, FREQ_INDICES
from ortg_lab.ingest import Dataset, TeamSeasonRow
from ortg_lab.optimize import (
    FeasibleRegion,
    GameplanCandidate,
    derive_feasible_region,
    gameplan_to_json_bytes,
    hypothesis_check,
    optimize_gameplan,
    project_feasible,
    sensitivity_rank,
)

FREQ = list(FREQ_INDICES)
LIVE = FREQ[:3]  # miniature projection instances act on these three
PINNED = FREQ[3:]


class LinearStub:
    """predict = g . x + c; the gradient is the constant g."""

    def __init__(self, g, c=0.0):
        self.g = np.asarray(g, dtype=np.float64)
        self.c = c

    def predict_ortg(self, x):
        return float(self.g @ np.asarray(x) + self.c)

    def input_gradient(self, x):
        return self.g.copy()


class ConcaveStub:
    """predict = c - sum a_j (x_j - t_j)^2, strictly concave and separable."""

    def __init__(self, a, t, c=120.0):
        self.a = np.asarray(a, dtype=np.float64)
        self.t = np.asarray(t, dtype=np.float64)
        self.c = c

    def predict_ortg(self, x):
        d = np.asarray(x) - self.t
        return float(self.c - np.sum(self.a * d * d))

    def input_gradient(self, x):
        return -2.0 * self.a * (np.asarray(x) - self.t)


def miniature_region(l3, u3, cap3):
    """48-dim region where only three frequency coordinates are live.

    The other five frequency coordinates are pinned at 0.02 so the effective
    projection problem is exactly the 3-variable capped box."""
    lower = np.zeros(48)
    upper = np.ones(48)
    for j, idx in enumerate(LIVE):
        lower[idx], upper[idx] = l3[j], u3[j]
    for idx in PINNED:
        lower[idx] = upper[idx] = 0.02
    return FeasibleRegion(lower=lower, upper=upper, freq_sum_cap=cap3 + 5 * 0.02)


def qp_projection_oracle(x3, l3, u3, cap3):
    """Exact projection onto {l <= v <= u, sum v <= cap} by enumerating every
    KKT active-set candidate and keeping the closest feasible one."""
    x3, l3, u3 = map(np.asarray, (x3, l3, u3))
    best, best_d = None, np.inf
    for assign in itertools.product(("lo", "hi", "free"), repeat=3):
        free = [i for i, a in enumerate(assign) if a == "free"]
        fixed_sum = sum(l3[i] if a == "lo" else u3[i]
                        for i, a in enumerate(assign) if a != "free")
        for sum_active in (False, True):
            v = np.empty(3)
            for i, a in enumerate(assign):
                if a == "lo":
                    v[i] = l3[i]
                elif a == "hi":
                    v[i] = u3[i]
            if sum_active:
                if not free:
                    continue
                lam = (x3[free].sum() + fixed_sum - cap3) / len(free)
                if lam < -1e-12:
                    continue
                v[free] = x3[free] - lam
            else:
                v[free] = x3[free]
            if np.any(v < l3 - 1e-12) or np.any(v > u3 + 1e-12):
                continue
            if v.sum() > cap3 + 1e-12:
                continue
            d = float(np.sum((v - x3) ** 2))
            if d < best_d:
                best, best_d = v, d
    return best


def two_row_dataset(iso_freqs=(0.1, 0.2)):
    rows = []
    for i, f in enumerate(iso_freqs):
        x = np.full(48, 0.3)
        x[FREQ] = 0.08
        x[0] = f  # iso_freq
        rows.append(TeamSeasonRow("2020-21", f"T{i}", 100.0 + i, x))
    data = Dataset(rows=rows)
    data.validate()
    return data


class TestDeriveRegion:
    def test_single_row_degenerate(self, noisy_dataset):
        data, _ = noisy_dataset
        one = Dataset(rows=data.rows[:1])
        region = derive_feasible_region(one, margin=0.0)
        x = one.rows[0].features
        assert np.array_equal(region.lower, x)
        assert np.array_equal(region.upper, x)
        assert region.freq_sum_cap == pytest.approx(float(x[FREQ].sum()))

    def test_every_row_feasible_at_margin_zero(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data, margin=0.0)
        for row in data.rows:
            assert region.contains(row.features)

    def test_margin_widens_bounds(self):
        region = derive_feasible_region(two_row_dataset(), margin=0.1)
        assert region.lower[0] == pytest.approx(0.09, abs=1e-12)
        assert region.upper[0] == pytest.approx(0.21, abs=1e-12)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            derive_feasible_region(Dataset(rows=[]))

    def test_bounds_clipped_to_unit_interval(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data, margin=10.0)
        assert np.all(region.lower >= 0.0) and np.all(region.upper <= 1.0)
        assert region.freq_sum_cap <= 1.0


class TestProjection:
    def test_feasible_point_unchanged(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        x = data.rows[5].features
        assert np.array_equal(project_feasible(x, region), x)

    def test_box_only_clamp(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        x = data.rows[5].features.copy()
        j = 10  # a non-frequency coordinate
        x[j] = region.upper[j] + 0.3
        proj = project_feasible(x, region)
        assert proj[j] == region.upper[j]
        mask = np.ones(48, bool)
        mask[j] = False
        assert np.array_equal(proj[mask], x[mask])

    def test_matches_qp_oracle_on_miniature_instances(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            l3 = rng.uniform(0.0, 0.2, 3)
            u3 = l3 + rng.uniform(0.1, 0.5, 3)
            cap3 = min(l3.sum() + rng.uniform(0.05, (u3 - l3).sum()), 0.85)
            region = miniature_region(l3, u3, cap3)
            x = np.full(48, 0.5)
            x[PINNED] = 0.02
            x[LIVE] = rng.uniform(-0.2, 1.2, 3)
            oracle = qp_projection_oracle(x[LIVE], l3, u3, cap3)
            proj = project_feasible(x, region)
            assert np.max(np.abs(proj[LIVE] - oracle)) <= 1e-6
            assert region.contains(proj, tol=1e-9)

    def test_interior_point_over_cap(self):
        # the equal-shift would push the small coordinate below its lower
        # bound; the exact projection keeps it clipped
        l3 = np.array([0.05, 0.05, 0.05])
        u3 = np.array([0.50, 0.50, 0.50])
        cap3 = 0.30
        region = miniature_region(l3, u3, cap3)
        x = np.full(48, 0.5)
        x[PINNED] = 0.02
        x[LIVE] = [0.06, 0.45, 0.45]
        proj = project_feasible(x, region)
        oracle = qp_projection_oracle(x[LIVE], l3, u3, cap3)
        assert np.max(np.abs(proj[LIVE] - oracle)) <= 1e-6
        assert proj[LIVE][0] == pytest.approx(0.05, abs=1e-9)

    def test_idempotent(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        rng = np.random.default_rng(22)
        for _ in range(20):
            x = rng.uniform(-0.5, 1.5, 48)
            once = project_feasible(x, region)
            twice = project_feasible(once, region)
            assert np.max(np.abs(twice - once)) <= 1e-9

    def test_non_expansive(self):
        rng = np.random.default_rng(23)
        l3 = np.array([0.0, 0.0, 0.0])
        u3 = np.array([0.4, 0.4, 0.4])
        region = miniature_region(l3, u3, cap3=0.5)
        for _ in range(20):
            x, y = rng.uniform(-0.5, 1.5, 48), rng.uniform(-0.5, 1.5, 48)
            px, py = project_feasible(x, region), project_feasible(y, region)
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12


def lp_corner_oracle(g, region):
    """Closed-form maximizer of a positive linear objective: non-frequency
    coordinates at their upper bounds, frequency mass assigned greedily."""
    v = region.upper.copy()
    v[FREQ] = region.lower[FREQ]
    budget = region.freq_sum_cap - v[FREQ].sum()
    for idx in sorted(FREQ, key=lambda j: -g[j]):
        room = region.upper[idx] - v[idx]
        take = min(room, budget)
        v[idx] += take
        budget -= take
    return v


class TestOptimizeGameplan:
    def test_linear_positive_gradient_reaches_lp_corner(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        rng = np.random.default_rng(31)
        g = rng.uniform(5.0, 50.0, 48)
        stub = LinearStub(g, c=40.0)
        oracle = lp_corner_oracle(g, region)
        result = optimize_gameplan(stub, region, seed=1, restarts=4)
        assert np.max(np.abs(result.features - oracle)) <= 1e-9
        assert result.predicted_ortg == pytest.approx(stub.predict_ortg(oracle), abs=1e-9)
        assert region.contains(result.features, tol=1e-9)
        assert len(result.active_constraints) > 0
        assert "freq_sum" in result.active_constraints

    def test_concave_stub_with_slack_cap(self, noisy_dataset):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        rng = np.random.default_rng(32)
        a = rng.uniform(5.0, 15.0, 48)
        t = (region.lower + region.upper) / 2
        t[FREQ] = region.lower[FREQ]  # freq optimum far below the cap
        t[10] = region.upper[10] + 0.2  # push one coordinate onto its bound
        stub = ConcaveStub(a, t)
        oracle_x = np.clip(t, region.lower, region.upper)
        result = optimize_gameplan(stub, region, seed=2, restarts=6, data=data)
        assert abs(result.predicted_ortg - stub.predict_ortg(oracle_x)) <= 1e-3
        assert region.contains(result.features, tol=1e-9)

    def test_concave_stub_with_binding_cap_matches_waterfilling_oracle(self, noisy_dataset):
        # oracle: the KKT multiplier solve for the capped concave maximum,
        # an independent route from the projected-ascent production path
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        rng = np.random.default_rng(33)
        a = rng.uniform(5.0, 15.0, 48)
        t = np.clip((region.lower + region.upper) / 2, 0, 1)
        t[FREQ] = region.upper[FREQ]  # wants more frequency than the cap allows
        stub = ConcaveStub(a, t)

        oracle_x = np.clip(t, region.lower, region.upper)
        lo_mu, hi_mu = 0.0, 4 * float(a.max())
        for _ in range(200):
            mu = 0.5 * (lo_mu + hi_mu)
            vf = np.clip(t[FREQ] - mu / (2 * a[FREQ]), region.lower[FREQ], region.upper[FREQ])
            if vf.sum() > region.freq_sum_cap:
                lo_mu = mu
            else:
                hi_mu = mu
        oracle_x[FREQ] = np.clip(
            t[FREQ] - hi_mu / (2 * a[FREQ]), region.lower[FREQ], region.upper[FREQ]
        )
        oracle_value = stub.predict_ortg(oracle_x)

        # corroborate the oracle by random feasible sampling
        samples = project_feasible_batch(rng, region, 2000)
        assert max(stub.predict_ortg(s) for s in samples) <= oracle_value + 1e-9

        result = optimize_gameplan(stub, region, seed=3, restarts=8, data=data)
        assert abs(result.predicted_ortg - oracle_value) <= 1e-3
        assert region.contains(result.features, tol=1e-9)

    def test_locked_coordinate_held_and_never_better(self, noisy_dataset, linear_predictor):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        free = optimize_gameplan(linear_predictor, region, seed=4, restarts=6, data=data)
        locked_val = float(region.lower[0] + 0.5 * (region.upper[0] - region.lower[0]))
        locked = optimize_gameplan(
            linear_predictor, region, locked={"iso_freq": locked_val},
            seed=4, restarts=6, data=data,
        )
        assert locked.features[0] == locked_val
        assert locked.predicted_ortg <= free.predicted_ortg + 1e-9
        assert locked.locked == {"iso_freq": locked_val}
        assert "iso_freq" not in locked.active_constraints

    def test_locked_value_outside_region_rejected(self, noisy_dataset, linear_predictor):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        with pytest.raises(ValueError):
            optimize_gameplan(linear_predictor, region, locked={"iso_freq": 0.99}, seed=0)
        with pytest.raises(KeyError):
            optimize_gameplan(linear_predictor, region, locked={"putbacks_freq": 0.1}, seed=0)

    def test_deterministic_given_seed(self, noisy_dataset, linear_predictor):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        a = optimize_gameplan(linear_predictor, region, seed=5, restarts=4, data=data)
        b = optimize_gameplan(linear_predictor, region, seed=5, restarts=4, data=data)
        assert gameplan_to_json_bytes(a, region) == gameplan_to_json_bytes(b, region)


def project_feasible_batch(rng, region, count):
    out = []
    for _ in range(count):
        out.append(project_feasible(rng.uniform(0, 1, 48), region))
    return out


class TestSensitivity:
    def test_linear_closed_form(self, noisy_dataset, linear_predictor):
        data, _ = noisy_dataset
        report = sensitivity_rank(linear_predictor, data)
        jac = linear_predictor.pipeline.jacobian()
        grads = linear_predictor.pipeline.target_range * (
            jac.T @ linear_predictor.model.weights
        )
        stds = data.feature_matrix().std(axis=0, ddof=1)
        expected = {FEATURE_NAMES[j]: grads[j] * stds[j] for j in range(48)}
        for entry in report.entries:
            assert entry.score == pytest.approx(expected[entry.name], abs=1e-9)
        scores = [e.score for e in report.entries]
        assert scores == sorted(scores, reverse=True)

    def test_zero_predictor_lexicographic_ties(self, noisy_dataset):
        data, _ = noisy_dataset
        stub = LinearStub(np.zeros(48))
        report = sensitivity_rank(stub, data)
        assert all(e.score == 0.0 for e in report.entries)
        assert report.names() == sorted(FEATURE_NAMES)

    def test_doubling_std_doubles_score(self):
        stub = LinearStub(np.full(48, 2.0))
        base = two_row_dataset(iso_freqs=(0.10, 0.20))
        wide = two_row_dataset(iso_freqs=(0.05, 0.25))  # doubled spread
        s_base = {e.name: e.score for e in sensitivity_rank(stub, base).entries}
        s_wide = {e.name: e.score for e in sensitivity_rank(stub, wide).entries}
        assert s_wide["iso_freq"] == pytest.approx(2 * s_base["iso_freq"], rel=1e-12)

    def test_row_permutation_invariance(self, noisy_dataset, linear_predictor):
        data, _ = noisy_dataset
        rng = np.random.default_rng(41)
        shuffled = Dataset(rows=[data.rows[i] for i in rng.permutation(len(data))])
        a = sensitivity_rank(linear_predictor, data)
        b = sensitivity_rank(linear_predictor, shuffled)
        assert a.names() == b.names()
        for ea, eb in zip(a.entries, b.entries):
            assert ea.score == pytest.approx(eb.score, abs=1e-12)

    def test_empty_dataset_rejected(self, linear_predictor):
        with pytest.raises(ValueError):
            sensitivity_rank(linear_predictor, Dataset(rows=[]))


def candidate_with(**named_values):
    x = np.full(48, 0.1)
    x[FREQ] = 0.08
    for name, value in named_values.items():
        x[FEATURE_NAMES.index(name)] = value
    return GameplanCandidate(features=x, predicted_ortg=110.0)


class TestHypothesisCheck:
    def test_iso_within(self):
        result = hypothesis_check(candidate_with(iso_freq=0.22))
        assert result["checks"]["isolation_frequency"]["verdict"] == "within"

    def test_transition_below(self):
        result = hypothesis_check(candidate_with(trans_freq=0.15))
        assert result["checks"]["transition_frequency"]["verdict"] == "below"

    def test_pnr_combined_within(self):
        result = hypothesis_check(candidate_with(prbh_freq=0.08, prrm_freq=0.07))
        assert result["checks"]["pnr_combined_frequency"]["verdict"] == "within"

    def test_spotup_gate_on_efficiency(self):
        low_fg = hypothesis_check(candidate_with(spotup_fg_pct=0.35, spotup_freq=0.26))
        assert low_fg["checks"]["spotup_quality"]["verdict"] == "below"
        good = hypothesis_check(candidate_with(spotup_fg_pct=0.41, spotup_freq=0.26))
        assert good["checks"]["spotup_quality"]["verdict"] == "within"
        above = hypothesis_check(candidate_with(spotup_fg_pct=0.41, spotup_freq=0.30))
        assert above["checks"]["spotup_quality"]["verdict"] == "above"

    def test_all_verdicts_present_and_bounded(self):
        result = hypothesis_check(candidate_with())
        assert set(result["checks"]) == {
            "isolation_frequency", "spotup_quality",
            "transition_frequency", "pnr_combined_frequency",
        }
        for check in result["checks"].values():
            assert check["verdict"] in ("below", "within", "above")
        assert 0 <= result["within_count"] <= 4


class TestGameplanJson:
    def test_document_shape(self, noisy_dataset, linear_predictor):
        data, _ = noisy_dataset
        region = derive_feasible_region(data)
        result = optimize_gameplan(linear_predictor, region, seed=6, restarts=2, data=data)
        import json

        doc = json.loads(gameplan_to_json_bytes(result, region))
        assert set(doc) == {
            "predicted_ortg", "features", "active_constraints",
            "locked", "hypothesis_checks", "region_fingerprint",
        }
        assert len(doc["features"]) == 48
        assert doc["region_fingerprint"] == region.fingerprint()
        assert len(doc["hypothesis_checks"]["checks"]) == 4

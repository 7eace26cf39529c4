"""Gameplan search: maximize predicted ORTG over the realistic feature box
(observed per-feature ranges intersected with a playtype-frequency-sum cap),
rank feature sensitivity, and score candidates against the four gameplan
hypothesis bands.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_NAMES, FREQ_INDICES, N_FEATURES, FeatureKey
from .fileio import atomic_write_bytes
from .ingest import Dataset

FEASIBILITY_TOL = 1e-9
ACTIVE_TOL = 1e-8

_FREQ = np.array(FREQ_INDICES)


@dataclass
class FeasibleRegion:
    """Box bounds per feature plus a cap on the eight-frequency sum."""

    lower: np.ndarray  # (48,)
    upper: np.ndarray  # (48,)
    freq_sum_cap: float

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != (N_FEATURES,) or self.upper.shape != (N_FEATURES,):
            raise ValueError("bounds must be 48-vectors")
        if np.any(self.lower > self.upper):
            bad = int(np.flatnonzero(self.lower > self.upper)[0])
            raise ValueError(f"lower > upper for {FEATURE_NAMES[bad]}")
        if np.any(self.lower < 0) or np.any(self.upper > 1):
            raise ValueError("bounds must lie within [0, 1]")
        if not 0 < self.freq_sum_cap <= 1:
            raise ValueError(f"freq_sum_cap {self.freq_sum_cap} outside (0, 1]")
        if self.lower[_FREQ].sum() > self.freq_sum_cap + FEASIBILITY_TOL:
            raise ValueError(
                "region is empty: frequency lower bounds exceed the sum cap"
            )

    def contains(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(
            np.all(x >= self.lower - tol)
            and np.all(x <= self.upper + tol)
            and x[_FREQ].sum() <= self.freq_sum_cap + tol
        )

    def out_of_bounds_names(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> list[str]:
        x = np.asarray(x, dtype=np.float64)
        bad = (x < self.lower - tol) | (x > self.upper + tol)
        return [FEATURE_NAMES[i] for i in np.flatnonzero(bad)]

    def fingerprint(self) -> str:
        payload = ",".join(
            [repr(float(v)) for v in self.lower]
            + [repr(float(v)) for v in self.upper]
            + [repr(float(self.freq_sum_cap))]
        ).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def pin(self, locked: dict[str, float]) -> "FeasibleRegion":
        """Shrink locked coordinates to a point; validates feasibility."""
        lower = self.lower.copy()
        upper = self.upper.copy()
        for name, value in locked.items():
            j = FeatureKey.from_name(name).index
            if not self.lower[j] - FEASIBILITY_TOL <= value <= self.upper[j] + FEASIBILITY_TOL:
                raise ValueError(
                    f"locked {name}={value!r} outside region "
                    f"[{self.lower[j]!r}, {self.upper[j]!r}]"
                )
            lower[j] = upper[j] = value
        if lower[_FREQ].sum() > self.freq_sum_cap + FEASIBILITY_TOL:
            raise ValueError("locked frequencies exceed the frequency-sum cap")
        return FeasibleRegion(lower=lower, upper=upper, freq_sum_cap=self.freq_sum_cap)


def derive_feasible_region(data: Dataset, margin: float = 0.0) -> FeasibleRegion:
    """Observed per-feature extrema widened by ``margin`` x range, clipped to
    [0, 1]; the frequency cap is the max observed frequency sum, widened the
    same way."""
    if len(data) == 0:
        raise ValueError("cannot derive a region from an empty dataset")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    X = data.feature_matrix()
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = hi - lo
    lower = np.clip(lo - margin * span, 0.0, 1.0)
    upper = np.clip(hi + margin * span, 0.0, 1.0)
    sums = X[:, _FREQ].sum(axis=1)
    cap = min(1.0, float(sums.max() + margin * (sums.max() - sums.min())))
    return FeasibleRegion(lower=lower, upper=upper, freq_sum_cap=cap)


def project_feasible(x: np.ndarray, region: FeasibleRegion) -> np.ndarray:
    """Euclidean projection onto {box} ∩ {frequency sum <= cap}.

    Box-clip first; if the frequency sum still exceeds the cap, shift the
    frequency block by the KKT multiplier: freq_j = clip(x_j - lam, l_j, u_j)
    with lam chosen so the sum hits the cap (bisection on a monotone
    piecewise-linear function, solved to float precision).
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.clip(x, region.lower, region.upper)
    freq_sum = v[_FREQ].sum()
    if freq_sum <= region.freq_sum_cap + 1e-15:
        return v

    xf = x[_FREQ]
    lf = region.lower[_FREQ]
    uf = region.upper[_FREQ]
    cap = region.freq_sum_cap

    def shifted_sum(lam: float) -> float:
        return float(np.clip(xf - lam, lf, uf).sum())

    lo, hi = 0.0, float((xf - lf).max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if shifted_sum(mid) > cap:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    v[_FREQ] = np.clip(xf - hi, lf, uf)
    return v


@dataclass
class GameplanCandidate:
    features: np.ndarray  # (48,), feasible
    predicted_ortg: float
    active_constraints: list[str] = field(default_factory=list)
    locked: dict[str, float] = field(default_factory=dict)


def _active_constraints(x: np.ndarray, region: FeasibleRegion,
                        locked: dict[str, float]) -> list[str]:
    names = []
    for j in range(N_FEATURES):
        name = FEATURE_NAMES[j]
        if name in locked:
            continue
        if x[j] - region.lower[j] <= ACTIVE_TOL or region.upper[j] - x[j] <= ACTIVE_TOL:
            names.append(name)
    if region.freq_sum_cap - x[_FREQ].sum() <= ACTIVE_TOL:
        names.append("freq_sum")
    return names


def optimize_gameplan(
    predictor,
    region: FeasibleRegion,
    locked: dict[str, float] | None = None,
    seed: int = 0,
    restarts: int = 16,
    step: float = 1e-2,
    max_iters: int = 500,
    tol: float = 1e-7,
    data: Dataset | None = None,
) -> GameplanCandidate:
    """Projected gradient ascent on predicted ORTG with step halving.

    ``predictor`` needs ``predict_ortg(x) -> float`` and
    ``input_gradient(x) -> (48,)``. Starting points are the dataset rows with
    the best observed ORTG (when ``data`` is given) plus seeded uniform draws
    from the box, all projected into the region. Locked features are pinned
    by shrinking their bounds to a point. Deterministic given ``seed``.
    """
    locked = dict(locked or {})
    work_region = region.pin(locked) if locked else region
    locked_idx = np.array(
        [FeatureKey.from_name(n).index for n in locked], dtype=np.int64
    )

    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    starts: list[np.ndarray] = []
    if data is not None and len(data) > 0:
        order = np.argsort(-data.ortg_array(), kind="stable")
        for i in order[: max(1, restarts // 2)]:
            starts.append(project_feasible(data.rows[int(i)].features, work_region))
    while len(starts) < restarts:
        draw = rng.uniform(work_region.lower, work_region.upper)
        starts.append(project_feasible(draw, work_region))

    best_x = None
    best_f = -np.inf
    for start in starts:
        x = start
        fx = float(predictor.predict_ortg(x))
        alpha = step
        for _ in range(max_iters):
            g = predictor.input_gradient(x)
            if locked_idx.size:
                g = g.copy()
                g[locked_idx] = 0.0
            accepted = False
            a = alpha
            # At least one halving is tried before the iterate is rejected.
            for _h in range(30):
                cand = project_feasible(x + a * g, work_region)
                fc = float(predictor.predict_ortg(cand))
                if fc > fx:
                    move = float(np.max(np.abs(cand - x)))
                    x, fx = cand, fc
                    accepted = True
                    break
                a *= 0.5
            if not accepted:
                break
            if move <= tol:
                break
        if fx > best_f or (fx == best_f and tuple(x) < tuple(best_x)):
            best_x, best_f = x, fx

    return GameplanCandidate(
        features=best_x,
        predicted_ortg=best_f,
        active_constraints=_active_constraints(best_x, work_region, locked),
        locked=locked,
    )


# ---------------------------------------------------------------------------
# Sensitivity ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityEntry:
    name: str
    mean_gradient: float  # d ORTG / d feature, averaged over dataset rows
    feature_std: float
    score: float  # mean_gradient * std


@dataclass
class SensitivityReport:
    entries: list[SensitivityEntry]  # descending score, ties by name

    def names(self) -> list[str]:
        return [e.name for e in self.entries]


def sensitivity_rank(predictor, data: Dataset) -> SensitivityReport:
    """Mean input gradient per feature scaled by the feature's sample std,
    ranked descending."""
    if len(data) == 0:
        raise ValueError("cannot rank sensitivity on an empty dataset")
    X = data.feature_matrix()
    grads = np.zeros(N_FEATURES)
    for row in X:
        grads += predictor.input_gradient(row)
    grads /= X.shape[0]
    stds = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(N_FEATURES)
    scores = grads * stds
    order = sorted(range(N_FEATURES), key=lambda j: (-scores[j], FEATURE_NAMES[j]))
    entries = [
        SensitivityEntry(
            name=FEATURE_NAMES[j],
            mean_gradient=float(grads[j]),
            feature_std=float(stds[j]),
            score=float(scores[j]),
        )
        for j in order
    ]
    return SensitivityReport(entries=entries)


# ---------------------------------------------------------------------------
# Hypothesis bands
# ---------------------------------------------------------------------------

ISO_FREQ_BAND = (0.20, 0.25)
SPOTUP_FG_FLOOR = 0.40
SPOTUP_FG_TARGET = (0.40, 0.42)
SPOTUP_FREQ_BAND = (0.25, 0.28)
TRANSITION_FREQ_BAND = (0.17, 0.20)
PNR_COMBINED_BAND = (0.13, 0.17)


def _band_verdict(value: float, band: tuple[float, float]) -> str:
    if value < band[0]:
        return "below"
    if value > band[1]:
        return "above"
    return "within"


def hypothesis_check(candidate: GameplanCandidate) -> dict:
    """Score a candidate against the four gameplan hypothesis bands.

    The spot-up check gates on efficiency first: below the 40% field-goal
    floor the verdict is "below" regardless of frequency; otherwise it is the
    frequency-band verdict.
    """
    x = np.asarray(candidate.features, dtype=np.float64)
    get = lambda name: float(x[FeatureKey.from_name(name).index])

    iso = get("iso_freq")
    spot_fg = get("spotup_fg_pct")
    spot_freq = get("spotup_freq")
    trans = get("trans_freq")
    pnr = get("prbh_freq") + get("prrm_freq")

    if spot_fg < SPOTUP_FG_FLOOR:
        spot_verdict = "below"
    else:
        spot_verdict = _band_verdict(spot_freq, SPOTUP_FREQ_BAND)

    checks = {
        "isolation_frequency": {
            "verdict": _band_verdict(iso, ISO_FREQ_BAND),
            "value": iso,
            "band": list(ISO_FREQ_BAND),
        },
        "spotup_quality": {
            "verdict": spot_verdict,
            "value": spot_freq,
            "band": list(SPOTUP_FREQ_BAND),
            "fg_pct": spot_fg,
            "fg_floor": SPOTUP_FG_FLOOR,
        },
        "transition_frequency": {
            "verdict": _band_verdict(trans, TRANSITION_FREQ_BAND),
            "value": trans,
            "band": list(TRANSITION_FREQ_BAND),
        },
        "pnr_combined_frequency": {
            "verdict": _band_verdict(pnr, PNR_COMBINED_BAND),
            "value": pnr,
            "band": list(PNR_COMBINED_BAND),
        },
    }
    within = sum(1 for c in checks.values() if c["verdict"] == "within")
    return {"checks": checks, "within_count": within}


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def gameplan_to_json_bytes(candidate: GameplanCandidate,
                           region: FeasibleRegion) -> bytes:
    hypo = hypothesis_check(candidate)
    doc = {
        "predicted_ortg": candidate.predicted_ortg,
        "features": {
            FEATURE_NAMES[j]: float(candidate.features[j]) for j in range(N_FEATURES)
        },
        "active_constraints": candidate.active_constraints,
        "locked": candidate.locked,
        "hypothesis_checks": hypo,
        "region_fingerprint": region.fingerprint(),
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def write_gameplan(candidate: GameplanCandidate, region: FeasibleRegion,
                   path) -> None:
    atomic_write_bytes(path, gameplan_to_json_bytes(candidate, region))


def sensitivity_to_json_bytes(report: SensitivityReport) -> bytes:
    doc = {
        "entries": [
            {
                "name": e.name,
                "mean_gradient": e.mean_gradient,
                "feature_std": e.feature_std,
                "score": e.score,
            }
            for e in report.entries
        ]
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def sensitivity_to_csv_bytes(report: SensitivityReport) -> bytes:
    lines = ["name,mean_gradient,feature_std,score"]
    for e in report.entries:
        lines.append(f"{e.name},{e.mean_gradient!r},{e.feature_std!r},{e.score!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")

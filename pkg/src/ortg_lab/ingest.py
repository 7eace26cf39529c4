"""Team-season dataset model: ORTG arithmetic, CSV parsing/serialization,
and a synthetic generator with a planted linear ground truth.

The canonical interchange format is a 51-column CSV: ``season,team,ortg``
followed by the 48 feature columns in canonical order. Numbers are written
as shortest round-trip decimals (Python ``repr``), so parse(serialize(ds))
reproduces a dataset bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import RowValidationError, SchemaError
from .features import FEATURE_NAMES, FREQ_INDICES, MetricKind, N_FEATURES, PlaytypeKind

CSV_COLUMNS: tuple[str, ...] = ("season", "team", "ortg") + FEATURE_NAMES

FREQ_SUM_TOL = 1e-9


def compute_ortg(points_scored: float, possessions: float) -> float:
    """Offensive rating: points per 100 possessions."""
    if possessions == 0:
        raise ValueError("zero possessions")
    if possessions < 0:
        raise ValueError(f"possessions must be positive, got {possessions}")
    if points_scored < 0:
        raise ValueError(f"points scored must be nonnegative, got {points_scored}")
    return 100.0 * points_scored / possessions


def validate_features(values: np.ndarray) -> None:
    """Check the 48-feature invariants; raises ValueError on violation."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (N_FEATURES,):
        raise ValueError(f"expected {N_FEATURES} features, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        bad = FEATURE_NAMES[int(np.flatnonzero(~np.isfinite(values))[0])]
        raise ValueError(f"non-finite value for {bad}")
    if np.any(values < 0.0) or np.any(values > 1.0):
        bad = int(np.flatnonzero((values < 0.0) | (values > 1.0))[0])
        raise ValueError(
            f"{FEATURE_NAMES[bad]} = {values[bad]!r} outside [0, 1]"
        )
    freq_sum = float(values[list(FREQ_INDICES)].sum())
    if freq_sum > 1.0 + FREQ_SUM_TOL:
        raise ValueError(f"playtype frequencies sum to {freq_sum!r} > 1")


@dataclass(frozen=True)
class TeamSeasonRow:
    """One labeled sample: a team-season feature profile with its ORTG."""

    season: str
    team: str
    ortg: float
    features: np.ndarray  # (48,) float64, canonical order

    def validate(self) -> None:
        if not self.season:
            raise ValueError("empty season label")
        if not self.team:
            raise ValueError("empty team code")
        if not math.isfinite(self.ortg) or self.ortg <= 0:
            raise ValueError(f"ortg must be finite and positive, got {self.ortg!r}")
        validate_features(self.features)


@dataclass
class Dataset:
    """Ordered collection of team-season rows; order is source order."""

    rows: list[TeamSeasonRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def feature_matrix(self) -> np.ndarray:
        return np.array([r.features for r in self.rows], dtype=np.float64)

    def ortg_array(self) -> np.ndarray:
        return np.array([r.ortg for r in self.rows], dtype=np.float64)

    def validate(self) -> None:
        seen: set[tuple[str, str]] = set()
        for r in self.rows:
            r.validate()
            key = (r.season, r.team)
            if key in seen:
                raise ValueError(f"duplicate (season, team) pair {key}")
            seen.add(key)

    def fingerprint(self) -> str:
        """64-bit hex content hash of the canonical CSV serialization."""
        digest = hashlib.sha256(serialize_dataset_csv(self)).hexdigest()
        return digest[:16]


def _open_text(source) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    # binary file-like
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def parse_dataset_csv(source) -> Dataset:
    """Parse the canonical 51-column CSV from a path, bytes, or file object.

    Raises SchemaError when the header deviates from the canonical column
    list, and RowValidationError (with the 1-based file line) for bad cells.
    """
    fh = _open_text(source)
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: missing header row") from None
    if tuple(header) != CSV_COLUMNS:
        _explain_header_mismatch(header)

    rows: list[TeamSeasonRow] = []
    seen: set[tuple[str, str]] = set()
    for line_no, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(CSV_COLUMNS):
            raise RowValidationError(
                line_no, f"expected {len(CSV_COLUMNS)} cells, got {len(cells)}"
            )
        season, team = cells[0], cells[1]
        try:
            ortg = float(cells[2])
        except ValueError:
            raise RowValidationError(line_no, f"ortg is not numeric: {cells[2]!r}") from None
        values = np.empty(N_FEATURES, dtype=np.float64)
        for j, cell in enumerate(cells[3:]):
            try:
                values[j] = float(cell)
            except ValueError:
                raise RowValidationError(
                    line_no, f"{FEATURE_NAMES[j]} is not numeric: {cell!r}"
                ) from None
        row = TeamSeasonRow(season=season, team=team, ortg=ortg, features=values)
        try:
            row.validate()
        except ValueError as exc:
            raise RowValidationError(line_no, str(exc)) from None
        key = (season, team)
        if key in seen:
            raise RowValidationError(line_no, f"duplicate (season, team) pair {key}")
        seen.add(key)
        rows.append(row)
    return Dataset(rows=rows)


def _explain_header_mismatch(header: list[str]) -> None:
    expected = set(CSV_COLUMNS)
    got = set(header)
    missing = [c for c in CSV_COLUMNS if c not in got]
    extra = [c for c in header if c not in expected]
    if missing:
        raise SchemaError(f"missing column {missing[0]!r}")
    if extra:
        raise SchemaError(f"unexpected column {extra[0]!r}")
    raise SchemaError("columns are out of canonical order")


def serialize_dataset_csv(data: Dataset) -> bytes:
    """Serialize to the canonical CSV with shortest round-trip decimals."""
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS))
    out.write("\n")
    for r in data.rows:
        cells = [r.season, r.team, repr(float(r.ortg))]
        cells.extend(repr(float(v)) for v in r.features)
        out.write(",".join(cells))
        out.write("\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Synthetic data with a planted linear ground truth
# ---------------------------------------------------------------------------

def _default_planted_weights() -> np.ndarray:
    """Basketball-plausible linear rule over the raw 48 features."""
    freq_w = {
        PlaytypeKind.ISOLATION: 6.0,
        PlaytypeKind.TRANSITION: 8.0,
        PlaytypeKind.PNR_BALL_HANDLER: 2.0,
        PlaytypeKind.PNR_ROLL_MAN: 1.0,
        PlaytypeKind.POST_UP: -2.0,
        PlaytypeKind.SPOT_UP: 7.0,
        PlaytypeKind.CUT: 1.0,
        PlaytypeKind.OFF_SCREEN: 0.5,
    }
    metric_w = {
        MetricKind.FG_PCT: 8.0,
        MetricKind.FT_FREQ: 3.0,
        MetricKind.TOV_FREQ: -20.0,
        MetricKind.AND_ONE_FREQ: 5.0,
        MetricKind.SCORE_FREQ: 15.0,
    }
    w = np.empty(N_FEATURES, dtype=np.float64)
    i = 0
    for p in PlaytypeKind:
        for m in MetricKind:
            w[i] = freq_w[p] if m is MetricKind.FREQ else metric_w[m]
            i += 1
    return w


_METRIC_RANGES = {
    MetricKind.FG_PCT: (0.30, 0.65),
    MetricKind.FT_FREQ: (0.02, 0.25),
    MetricKind.TOV_FREQ: (0.05, 0.25),
    MetricKind.AND_ONE_FREQ: (0.01, 0.10),
    MetricKind.SCORE_FREQ: (0.30, 0.65),
}


def _default_feature_ranges() -> tuple[np.ndarray, np.ndarray]:
    low = np.zeros(N_FEATURES)
    high = np.ones(N_FEATURES)
    i = 0
    for _p in PlaytypeKind:
        for m in MetricKind:
            if m is not MetricKind.FREQ:
                low[i], high[i] = _METRIC_RANGES[m]
            i += 1
    return low, high


@dataclass
class GroundTruth:
    """The planted rule: ortg = weights . features + bias (+ N(0, sigma))."""

    weights: np.ndarray  # (48,)
    bias: float
    sigma: float


@dataclass
class SyntheticSpec:
    """Sampling plan for synthetic team seasons.

    The eight playtype frequencies are drawn on a scaled simplex: eight
    positives normalized to a total drawn uniformly from ``freq_sum_range``,
    so the frequency-sum constraint stays active and the excluded playtypes
    keep a realistic share. Non-frequency features are uniform within their
    per-feature [low, high] range; when ``latent_dim`` is set they are convex
    mixtures of ``latent_dim - 8`` shared uniforms, which bounds the affine
    rank of the sample matrix by ``latent_dim`` (so a truncated-PCA model can
    represent the planted rule exactly). ``latent_dim=None`` samples every
    feature independently (full rank, identifiable weights).
    """

    low: np.ndarray = None
    high: np.ndarray = None
    freq_sum_range: tuple[float, float] = (0.70, 0.95)
    latent_dim: int | None = 18
    weights: np.ndarray = None
    bias: float = 35.0
    sigma: float = 2.0

    def __post_init__(self):
        if self.low is None or self.high is None:
            low, high = _default_feature_ranges()
            self.low = low if self.low is None else np.asarray(self.low, float)
            self.high = high if self.high is None else np.asarray(self.high, float)
        else:
            self.low = np.asarray(self.low, dtype=np.float64)
            self.high = np.asarray(self.high, dtype=np.float64)
        if self.weights is None:
            self.weights = _default_planted_weights()
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.low.shape != (N_FEATURES,) or self.high.shape != (N_FEATURES,):
            raise ValueError("low/high must be 48-vectors")
        if np.any(self.low < 0) or np.any(self.high > 1) or np.any(self.low > self.high):
            raise ValueError("feature sampling ranges must satisfy 0 <= low <= high <= 1")
        lo, hi = self.freq_sum_range
        if not (0 < lo <= hi <= 1):
            raise ValueError(f"freq_sum_range {self.freq_sum_range} outside (0, 1]")
        if self.latent_dim is not None and not (9 <= self.latent_dim <= N_FEATURES):
            raise ValueError("latent_dim must be in [9, 48] or None")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def _mixing_matrix(n_outputs: int, n_latents: int) -> np.ndarray:
    """Fixed convex mixing of latents: full column rank, entries in [0, 1]."""
    m = np.full((n_outputs, n_latents), 0.3 / (n_latents - 1))
    for j in range(n_outputs):
        m[j, j % n_latents] = 0.7
    return m


def generate_synthetic_dataset(
    seed: int, n: int, spec: SyntheticSpec | None = None
) -> tuple[Dataset, GroundTruth]:
    """Deterministic synthetic dataset of ``n`` team seasons.

    Returns the dataset together with the planted ground truth so tests can
    check recovery against an independent solve.
    """
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if spec is None:
        spec = SyntheticSpec()

    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    non_freq = np.array([i for i in range(N_FEATURES) if i not in FREQ_INDICES])
    freq_idx = np.array(FREQ_INDICES)
    span = spec.high - spec.low

    mix = None
    if spec.latent_dim is not None:
        mix = _mixing_matrix(len(non_freq), spec.latent_dim - 8)

    rows: list[TeamSeasonRow] = []
    for i in range(n):
        x = np.empty(N_FEATURES, dtype=np.float64)
        raw = rng.uniform(0.05, 1.0, size=8)
        s = rng.uniform(spec.freq_sum_range[0], spec.freq_sum_range[1])
        x[freq_idx] = s * raw / raw.sum()
        if mix is None:
            u = rng.uniform(0.0, 1.0, size=len(non_freq))
            x[non_freq] = spec.low[non_freq] + span[non_freq] * u
        else:
            u = rng.uniform(0.0, 1.0, size=mix.shape[1])
            x[non_freq] = spec.low[non_freq] + span[non_freq] * (mix @ u)
        noise = rng.normal(0.0, spec.sigma) if spec.sigma > 0 else 0.0
        ortg = float(spec.weights @ x + spec.bias + noise)
        rows.append(
            TeamSeasonRow(season="synth", team=f"S{i:03d}", ortg=ortg, features=x)
        )

    data = Dataset(rows=rows)
    data.validate()
    return data, GroundTruth(weights=spec.weights.copy(), bias=spec.bias, sigma=spec.sigma)

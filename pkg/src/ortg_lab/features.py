"""Playtype feature taxonomy: 8 playtypes x 6 per-playtype metrics = 48 features.

The canonical flat ordering (playtype-major, metric-minor) is fixed and shared
by the CSV schema, feature vectors, model inputs, and every report. Putbacks,
miscellaneous, and handoff possessions are deliberately not representable:
they do not describe a coachable offensive scheme, and their frequency share
is whatever the eight modeled playtypes leave over.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class PlaytypeKind(enum.Enum):
    """The eight modeled offensive playtypes, in canonical order."""

    ISOLATION = "iso"
    TRANSITION = "trans"
    PNR_BALL_HANDLER = "prbh"
    PNR_ROLL_MAN = "prrm"
    POST_UP = "postup"
    SPOT_UP = "spotup"
    CUT = "cut"
    OFF_SCREEN = "offscr"

    @property
    def code(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return _PLAYTYPE_INDEX[self]


class MetricKind(enum.Enum):
    """The six per-playtype metrics, in canonical order."""

    FREQ = "freq"
    FG_PCT = "fg_pct"
    FT_FREQ = "ft_freq"
    TOV_FREQ = "tov_freq"
    AND_ONE_FREQ = "and1_freq"
    SCORE_FREQ = "score_freq"

    @property
    def code(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return _METRIC_INDEX[self]


_PLAYTYPE_INDEX = {p: i for i, p in enumerate(PlaytypeKind)}
_METRIC_INDEX = {m: i for i, m in enumerate(MetricKind)}

N_PLAYTYPES = len(PlaytypeKind)
N_METRICS = len(MetricKind)
N_FEATURES = N_PLAYTYPES * N_METRICS


@dataclass(frozen=True)
class FeatureKey:
    """One (playtype, metric) coordinate of the 48-dimensional profile."""

    playtype: PlaytypeKind
    metric: MetricKind

    @property
    def index(self) -> int:
        """Canonical flat index: playtype-major, metric-minor."""
        return self.playtype.index * N_METRICS + self.metric.index

    @property
    def name(self) -> str:
        """Canonical text name, e.g. ``iso_freq`` or ``spotup_fg_pct``."""
        return f"{self.playtype.code}_{self.metric.code}"

    @staticmethod
    def from_index(index: int) -> "FeatureKey":
        if not 0 <= index < N_FEATURES:
            raise IndexError(f"feature index {index} out of range [0, {N_FEATURES})")
        return ALL_KEYS[index]

    @staticmethod
    def from_name(name: str) -> "FeatureKey":
        try:
            return _KEY_BY_NAME[name]
        except KeyError:
            raise KeyError(f"unknown feature name {name!r}") from None


ALL_KEYS: tuple[FeatureKey, ...] = tuple(
    FeatureKey(p, m) for p in PlaytypeKind for m in MetricKind
)
FEATURE_NAMES: tuple[str, ...] = tuple(k.name for k in ALL_KEYS)
_KEY_BY_NAME = {k.name: k for k in ALL_KEYS}

# Flat indices of the eight *_freq coordinates (one per playtype).
FREQ_INDICES: tuple[int, ...] = tuple(
    FeatureKey(p, MetricKind.FREQ).index for p in PlaytypeKind
)

"""Remote playtype-statistics fetcher.

Talks to an NBA-stats-style JSON API and translates the payloads into the
canonical 51-column CSV. The expected upstream contract, per season:

* ``GET {endpoint}/stats/synergyplaytypes`` with query parameters
  ``SeasonYear``, ``PlayType`` (one of the eight upstream playtype names),
  ``PlayerOrTeam=T``, ``TypeGrouping=offensive``. The body is JSON with
  ``resultSets[0].headers`` / ``resultSets[0].rowSet``; required columns are
  ``TEAM_ABBREVIATION``, ``POSS_PCT``, ``FG_PCT``, ``FT_POSS_PCT``,
  ``TOV_POSS_PCT``, ``PLUSONE_POSS_PCT``, ``SCORE_POSS_PCT`` (fractions).
* ``GET {endpoint}/stats/leaguedashteamstats`` with ``Season`` and
  ``MeasureType=Advanced``; required columns ``TEAM_ABBREVIATION`` and
  ``OFF_RATING``.

Requests to one endpoint are serialized and rate-limited; output is written
atomically, so a failed fetch never leaves a partial CSV behind.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import StatusError, TransportError, TranslationError
from .features import MetricKind, PlaytypeKind
from .fileio import atomic_write_bytes
from .ingest import Dataset, TeamSeasonRow, serialize_dataset_csv

FIRST_TRACKED_SEASON = 2015

# Upstream PlayType query values, keyed by our playtype kinds.
UPSTREAM_PLAYTYPE = {
    PlaytypeKind.ISOLATION: "Isolation",
    PlaytypeKind.TRANSITION: "Transition",
    PlaytypeKind.PNR_BALL_HANDLER: "PRBallHandler",
    PlaytypeKind.PNR_ROLL_MAN: "PRRollman",
    PlaytypeKind.POST_UP: "Postup",
    PlaytypeKind.SPOT_UP: "Spotup",
    PlaytypeKind.CUT: "Cut",
    PlaytypeKind.OFF_SCREEN: "OffScreen",
}

UPSTREAM_METRIC_COLUMN = {
    MetricKind.FREQ: "POSS_PCT",
    MetricKind.FG_PCT: "FG_PCT",
    MetricKind.FT_FREQ: "FT_POSS_PCT",
    MetricKind.TOV_FREQ: "TOV_POSS_PCT",
    MetricKind.AND_ONE_FREQ: "PLUSONE_POSS_PCT",
    MetricKind.SCORE_FREQ: "SCORE_POSS_PCT",
}


@dataclass
class RetryPolicy:
    max_retries: int = 3
    backoff_seconds: float = 0.5
    timeout_seconds: float = 30.0
    min_interval_seconds: float = 0.6


_endpoint_locks: dict[str, threading.Lock] = {}
_endpoint_last_request: dict[str, float] = {}
_registry_lock = threading.Lock()


def _endpoint_lock(endpoint: str) -> threading.Lock:
    with _registry_lock:
        return _endpoint_locks.setdefault(endpoint, threading.Lock())


def _rate_limited_get(endpoint: str, path: str, params: dict,
                      policy: RetryPolicy) -> dict:
    """GET with per-endpoint serialization, rate limiting, and retries."""
    url = endpoint.rstrip("/") + path
    lock = _endpoint_lock(endpoint)
    last_exc: Exception | None = None
    with lock:
        for attempt in range(policy.max_retries + 1):
            wait = _endpoint_last_request.get(endpoint, 0.0) + \
                policy.min_interval_seconds - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            _endpoint_last_request[endpoint] = time.monotonic()
            try:
                resp = requests.get(url, params=params, timeout=policy.timeout_seconds)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                if attempt < policy.max_retries:
                    time.sleep(policy.backoff_seconds * (attempt + 1))
                continue
            if resp.status_code >= 500 and attempt < policy.max_retries:
                last_exc = StatusError(resp.status_code)
                time.sleep(policy.backoff_seconds * (attempt + 1))
                continue
            if resp.status_code != 200:
                raise StatusError(resp.status_code, f"{url} returned HTTP {resp.status_code}")
            try:
                return resp.json()
            except json.JSONDecodeError as exc:
                raise TranslationError(f"{url} did not return JSON: {exc}") from exc
    raise TransportError(
        f"{url} unreachable after {policy.max_retries + 1} attempts: {last_exc}"
    )


def _result_table(doc: dict, url_hint: str) -> dict[str, list]:
    """Extract {TEAM_ABBREVIATION: row-dict} from a resultSets payload."""
    try:
        result = doc["resultSets"][0]
        headers = result["headers"]
        row_set = result["rowSet"]
    except (KeyError, IndexError, TypeError) as exc:
        raise TranslationError(
            f"{url_hint}: payload lacks resultSets[0].headers/rowSet"
        ) from exc
    if "TEAM_ABBREVIATION" not in headers:
        raise TranslationError(f"{url_hint}: no TEAM_ABBREVIATION column")
    idx = {h: i for i, h in enumerate(headers)}
    table = {}
    for row in row_set:
        team = row[idx["TEAM_ABBREVIATION"]]
        table[team] = {h: row[idx[h]] for h in headers}
    return table


def _season_start_year(season: str) -> int:
    if not re.fullmatch(r"\d{4}-\d{2}", season):
        raise ValueError(f"season must look like 2022-23, got {season!r}")
    return int(season[:4])


def fetch_playtype_stats(endpoint: str, season: str,
                         retry_policy: RetryPolicy | None = None) -> bytes:
    """Fetch one season of team playtype stats and return the canonical CSV."""
    policy = retry_policy or RetryPolicy()
    if _season_start_year(season) < FIRST_TRACKED_SEASON:
        raise TranslationError(
            f"playtype tracking begins with the 2015-16 season; {season} predates it"
        )

    playtype_tables: dict[PlaytypeKind, dict] = {}
    for kind in PlaytypeKind:
        doc = _rate_limited_get(
            endpoint,
            "/stats/synergyplaytypes",
            {
                "SeasonYear": season,
                "PlayType": UPSTREAM_PLAYTYPE[kind],
                "PlayerOrTeam": "T",
                "TypeGrouping": "offensive",
                "LeagueID": "00",
                "SeasonType": "Regular Season",
            },
            policy,
        )
        playtype_tables[kind] = _result_table(doc, f"synergyplaytypes/{kind.code}")

    adv = _rate_limited_get(
        endpoint,
        "/stats/leaguedashteamstats",
        {"Season": season, "MeasureType": "Advanced"},
        policy,
    )
    ortg_table = _result_table(adv, "leaguedashteamstats")

    teams = sorted(ortg_table)
    if not teams:
        raise TranslationError(f"no teams in the {season} advanced-stats payload")
    for kind, table in playtype_tables.items():
        missing = sorted(set(teams) - set(table))
        if missing:
            raise TranslationError(
                f"team {missing[0]} missing from the {kind.code} playtype payload"
            )

    rows = []
    for team in teams:
        values = np.empty(len(PlaytypeKind) * len(MetricKind), dtype=np.float64)
        j = 0
        for kind in PlaytypeKind:
            record = playtype_tables[kind][team]
            for metric in MetricKind:
                column = UPSTREAM_METRIC_COLUMN[metric]
                try:
                    values[j] = float(record[column])
                except (KeyError, TypeError, ValueError) as exc:
                    raise TranslationError(
                        f"{team}/{kind.code}: bad or missing {column}: {exc}"
                    ) from exc
                j += 1
        try:
            ortg = float(ortg_table[team]["OFF_RATING"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TranslationError(f"{team}: bad or missing OFF_RATING: {exc}") from exc
        row = TeamSeasonRow(season=season, team=team, ortg=ortg, features=values)
        try:
            row.validate()
        except ValueError as exc:
            raise TranslationError(f"{team}: {exc}") from exc
        rows.append(row)

    return serialize_dataset_csv(Dataset(rows=rows))


def fetch_to_file(endpoint: str, season: str, out_path: str | Path,
                  retry_policy: RetryPolicy | None = None) -> int:
    """Fetch and atomically write the CSV; returns the row count."""
    payload = fetch_playtype_stats(endpoint, season, retry_policy)
    atomic_write_bytes(out_path, payload)
    return payload.count(b"\n") - 1

"""Embedded HTTP API for predictions, sensitivity, optimization, and presets.

The server is read-only: the predictor, dataset, feasible region, and cached
sensitivity ranking are loaded once at startup and shared immutably across
request threads. Optimize requests run an independent optimizer per request.

Routes (JSON bodies, UTF-8):
    GET  /api/health       -> {"status": "ok"}
    GET  /api/model        -> model metadata
    POST /api/predict      -> {"ortg", "normalized", "out_of_region"}
    POST /api/optimize     -> gameplan document (same bytes as the CLI)
    GET  /api/sensitivity  -> sensitivity ranking
    GET  /api/presets      -> dataset rows verbatim
    GET  /...              -> static UI assets when --ui-dir is configured

Every non-2xx response carries {"status", "code", "message"[, "field"]}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, N_FEATURES
from .ingest import Dataset
from .model import MlpModel, TrainedPredictor
from .optimize import (
    FeasibleRegion,
    derive_feasible_region,
    gameplan_to_json_bytes,
    optimize_gameplan,
    sensitivity_rank,
    sensitivity_to_json_bytes,
)

_FEATURE_SET = frozenset(FEATURE_NAMES)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".map": "application/json; charset=utf-8",
    ".ico": "image/x-icon",
}

_FALLBACK_INDEX = b"""<!doctype html>
<html><head><title>ortg-lab</title></head>
<body><h1>ortg-lab API</h1>
<p>No UI assets configured (start with --ui-dir). Endpoints:</p>
<ul><li>GET /api/health</li><li>GET /api/model</li><li>POST /api/predict</li>
<li>POST /api/optimize</li><li>GET /api/sensitivity</li><li>GET /api/presets</li></ul>
</body></html>
"""


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field: str | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.field = field
        super().__init__(message)

    def body(self) -> bytes:
        doc = {"status": self.status, "code": self.code, "message": self.message}
        if self.field is not None:
            doc["field"] = self.field
        return (json.dumps(doc) + "\n").encode("utf-8")


@dataclass
class ServiceState:
    predictor: TrainedPredictor
    data: Dataset
    region: FeasibleRegion
    sensitivity_body: bytes
    presets_body: bytes
    model_body: bytes
    allow_origin: str | None
    ui_dir: Path | None


def _model_metadata_body(predictor: TrainedPredictor) -> bytes:
    shape = None
    if isinstance(predictor.model, MlpModel):
        shape = list(predictor.model.layer_sizes[1:-1])
    doc = {
        "kind": predictor.kind,
        "shape": shape,
        "k": predictor.pipeline.k,
        "dataset_fingerprint": predictor.metadata.get("dataset_fingerprint"),
        "final_loss": predictor.metadata.get("final_loss"),
        "seed": predictor.metadata.get("seed"),
        "restarts": predictor.metadata.get("restarts"),
        "created_at": predictor.metadata.get("created_at"),
    }
    return (json.dumps(doc) + "\n").encode("utf-8")


def _presets_body(data: Dataset) -> bytes:
    rows = [
        {
            "season": r.season,
            "team": r.team,
            "ortg": float(r.ortg),
            "features": {
                FEATURE_NAMES[j]: float(r.features[j]) for j in range(N_FEATURES)
            },
        }
        for r in data.rows
    ]
    return (json.dumps(rows) + "\n").encode("utf-8")


def build_state(predictor: TrainedPredictor, data: Dataset,
                allow_origin: str | None = None,
                ui_dir: str | Path | None = None) -> ServiceState:
    region = derive_feasible_region(data)
    sensitivity = sensitivity_rank(predictor, data)
    return ServiceState(
        predictor=predictor,
        data=data,
        region=region,
        sensitivity_body=sensitivity_to_json_bytes(sensitivity),
        presets_body=_presets_body(data),
        model_body=_model_metadata_body(predictor),
        allow_origin=allow_origin,
        ui_dir=Path(ui_dir).resolve() if ui_dir else None,
    )


def _parse_predict_request(doc) -> np.ndarray:
    if not isinstance(doc, dict):
        raise ApiError(400, "bad_request", "request body must be a JSON object")
    for name in FEATURE_NAMES:
        if name not in doc:
            raise ApiError(400, "missing_feature", f"missing feature {name}", field=name)
    for name in doc:
        if name not in _FEATURE_SET:
            raise ApiError(400, "unknown_feature", f"unknown feature {name}", field=name)
    x = np.empty(N_FEATURES, dtype=np.float64)
    for j, name in enumerate(FEATURE_NAMES):
        value = doc[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ApiError(400, "not_a_number", f"{name} is not a number", field=name)
        value = float(value)
        if not math.isfinite(value):
            raise ApiError(400, "not_a_number", f"{name} is not finite", field=name)
        if value < 0.0 or value > 1.0:
            raise ApiError(
                422, "out_of_unit_interval",
                f"{name} = {value!r} outside [0, 1]", field=name,
            )
        x[j] = value
    return x


def handle_predict(state: ServiceState, doc) -> bytes:
    x = _parse_predict_request(doc)
    response = {
        "ortg": state.predictor.predict_ortg(x),
        "normalized": state.predictor.predict_normalized(x),
        "out_of_region": state.region.out_of_bounds_names(x),
    }
    return (json.dumps(response) + "\n").encode("utf-8")


def handle_optimize(state: ServiceState, doc) -> bytes:
    if not isinstance(doc, dict):
        raise ApiError(400, "bad_request", "request body must be a JSON object")
    locked = doc.get("locked", {})
    margin = doc.get("margin", 0.0)
    seed = doc.get("seed", 0)
    if not isinstance(locked, dict):
        raise ApiError(400, "bad_request", "locked must be an object")
    if isinstance(margin, bool) or not isinstance(margin, (int, float)) or margin < 0:
        raise ApiError(400, "bad_request", "margin must be a nonnegative number")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ApiError(400, "bad_request", "seed must be an integer")
    clean_locked: dict[str, float] = {}
    for name, value in locked.items():
        if name not in _FEATURE_SET:
            raise ApiError(400, "unknown_feature", f"unknown feature {name}", field=name)
        if isinstance(value, bool) or not isinstance(value, (int, float)) \
                or not math.isfinite(float(value)):
            raise ApiError(400, "not_a_number", f"lock {name} is not a number", field=name)
        clean_locked[name] = float(value)

    region = derive_feasible_region(state.data, margin=float(margin))
    try:
        candidate = optimize_gameplan(
            state.predictor, region, locked=clean_locked, seed=int(seed),
            data=state.data,
        )
    except ValueError as exc:
        raise ApiError(422, "locked_conflict", str(exc)) from exc
    return gameplan_to_json_bytes(candidate, region)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "ortg-lab"

    @property
    def state(self) -> ServiceState:
        return self.server.state

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send(self, status: int, body: bytes, content_type="application/json; charset=utf-8"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        if self.state.allow_origin:
            self.send_header("Access-Control-Allow-Origin", self.state.allow_origin)
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, err: ApiError):
        self._send(err.status, err.body())

    def _read_json(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "bad_json", f"request body is not valid JSON: {exc}")

    def do_OPTIONS(self):
        self.send_response(204)
        if self.state.allow_origin:
            self.send_header("Access-Control-Allow-Origin", self.state.allow_origin)
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/health":
                self._send(200, b'{"status":"ok"}\n')
            elif path == "/api/model":
                self._send(200, self.state.model_body)
            elif path == "/api/sensitivity":
                self._send(200, self.state.sensitivity_body)
            elif path == "/api/presets":
                self._send(200, self.state.presets_body)
            elif path.startswith("/api/"):
                self._send_error(ApiError(404, "not_found", f"no route {path}"))
            else:
                self._serve_static(path)
        except ApiError as err:
            self._send_error(err)
        except Exception as exc:  # noqa: BLE001 - handler boundary
            self._send_error(ApiError(500, "internal_error", str(exc)))

    def do_POST(self):
        try:
            path = self.path.split("?", 1)[0]
            doc = self._read_json()
            if path == "/api/predict":
                self._send(200, handle_predict(self.state, doc))
            elif path == "/api/optimize":
                self._send(200, handle_optimize(self.state, doc))
            else:
                self._send_error(ApiError(404, "not_found", f"no route {path}"))
        except ApiError as err:
            self._send_error(err)
        except Exception as exc:  # noqa: BLE001 - handler boundary
            self._send_error(ApiError(500, "internal_error", str(exc)))

    def _serve_static(self, path: str):
        ui_dir = self.state.ui_dir
        if ui_dir is None:
            if path in ("/", "/index.html"):
                self._send(200, _FALLBACK_INDEX, "text/html; charset=utf-8")
            else:
                self._send_error(ApiError(404, "not_found", f"no asset {path}"))
            return
        rel = path.lstrip("/") or "index.html"
        target = (ui_dir / rel).resolve()
        if not str(target).startswith(str(ui_dir)) or not target.is_file():
            self._send_error(ApiError(404, "not_found", f"no asset {path}"))
            return
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, state: ServiceState):
        super().__init__(address, _Handler)
        self.state = state


def build_server(predictor: TrainedPredictor, data: Dataset, port: int = 8080,
                 allow_origin: str | None = None,
                 ui_dir: str | Path | None = None,
                 host: str = "127.0.0.1") -> _Server:
    """Bind the service; ``port=0`` picks an ephemeral port (for tests)."""
    state = build_state(predictor, data, allow_origin=allow_origin, ui_dir=ui_dir)
    return _Server((host, port), state)

"""Leave-one-out cross-validation: n model fits, each predicting the one
held-out team season, pooled into RMSE (normalized and ORTG points) and R².

Folds are independent and may run on a thread pool; per-fold seeds are
derived as ``seed XOR fold_index`` and results are aggregated in fold order,
so the report is bit-identical no matter the thread count or scheduling.
"""

from __future__ import annotations

import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import FitError, MetricError
from .fileio import atomic_write_bytes
from .ingest import Dataset
from .model import TrainConfig, fit_linear_least_squares, mlp_train
from .transform import fit_minmax, fit_pipeline


def rmse(errors) -> float:
    """Root mean square of a nonempty error list."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("rmse of an empty error list")
    return float(np.sqrt(np.mean(errors * errors)))


def r_squared(actual, predicted) -> float:
    """1 - SSE/SST with SST about the mean of ``actual``."""
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.size == 0 or actual.shape != predicted.shape:
        raise ValueError(
            f"need equal nonempty lengths, got {actual.shape} vs {predicted.shape}"
        )
    sst = float(np.sum((actual - actual.mean()) ** 2))
    if sst == 0.0:
        raise MetricError("undefined R²: actual values have zero variance")
    sse = float(np.sum((actual - predicted) ** 2))
    return 1.0 - sse / sst


@dataclass(frozen=True)
class FoldResult:
    index: int
    season: str
    team: str
    actual_ortg: float
    predicted_ortg: float
    normalized_actual: float
    normalized_predicted: float


@dataclass
class EvalReport:
    model_kind: str
    k: int
    fit_scope: str
    seed: int
    hidden_shape: tuple[int, ...] | None
    rmse_normalized: float
    rmse_ortg: float
    r_squared: float
    folds: list[FoldResult]


def _fit_and_predict(kind, hidden_shape, cfg, Z_train, y_train, z_test):
    """Train one fold's model on normalized targets; predict the held-out
    sample in normalized units."""
    if kind == "linear":
        model = fit_linear_least_squares(Z_train, y_train)
    else:
        shape = (Z_train.shape[1],) + tuple(hidden_shape) + (1,)
        model = mlp_train(Z_train, y_train, shape, cfg)
    return float(model.predict(z_test))


def run_loocv(
    data: Dataset,
    model_kind: str,
    k: int,
    cfg: TrainConfig,
    fit_scope: str = "global",
    hidden_shape: tuple[int, ...] = (3,),
    threads: int | None = None,
) -> EvalReport:
    """LOOCV for the requested model class.

    ``fit_scope="global"`` fits the normalizers and PCA once on all rows
    before folding; ``"per_fold"`` refits them inside every fold (stricter,
    leakage-free). Normalized values in the report always refer to the
    global target range so rmse_normalized x range == rmse_ortg.
    """
    n = len(data)
    if n < 3:
        raise FitError(f"LOOCV needs at least 3 rows, got {n}")
    if k >= n - 1:
        raise FitError(f"k={k} needs more than {k + 1} rows, dataset has {n}")
    if model_kind not in ("linear", "mlp"):
        raise ValueError(f"unknown model kind {model_kind!r}")
    if fit_scope not in ("global", "per_fold"):
        raise ValueError(f"unknown fit scope {fit_scope!r}")

    X = data.feature_matrix()
    y = data.ortg_array()
    global_target = fit_minmax(y.reshape(-1, 1))
    t_min = float(global_target.mins[0])
    t_range = float(global_target.span[0])

    predicted = np.empty(n, dtype=np.float64)
    mask = np.ones(n, dtype=bool)

    if fit_scope == "global":
        pipeline = fit_pipeline(X, y, k)
        Z = pipeline.forward(X)
        y_norm = pipeline.target_normalizer.apply(y.reshape(-1, 1)).ravel()

        def fold(i: int) -> None:
            m = mask.copy()
            m[i] = False
            fold_cfg = replace(cfg, seed=cfg.seed ^ i)
            try:
                pred_norm = _fit_and_predict(
                    model_kind, hidden_shape, fold_cfg, Z[m], y_norm[m], Z[i]
                )
            except FitError as exc:
                raise FitError(f"fold {i}: {exc}") from exc
            predicted[i] = pipeline.denormalize_target(pred_norm)
    else:
        def fold(i: int) -> None:
            m = mask.copy()
            m[i] = False
            fold_cfg = replace(cfg, seed=cfg.seed ^ i)
            try:
                fold_pipe = fit_pipeline(X[m], y[m], k)
                Z_tr = fold_pipe.forward(X[m])
                y_tr = fold_pipe.target_normalizer.apply(y[m].reshape(-1, 1)).ravel()
                pred_norm = _fit_and_predict(
                    model_kind, hidden_shape, fold_cfg, Z_tr, y_tr,
                    fold_pipe.forward(X[i]),
                )
            except FitError as exc:
                raise FitError(f"fold {i}: {exc}") from exc
            predicted[i] = fold_pipe.denormalize_target(pred_norm)

    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    if workers == 1:
        for i in range(n):
            fold(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # list() re-raises the first fold failure
            list(pool.map(fold, range(n)))

    norm_actual = (y - t_min) / t_range
    norm_pred = (predicted - t_min) / t_range
    folds = [
        FoldResult(
            index=i,
            season=data.rows[i].season,
            team=data.rows[i].team,
            actual_ortg=float(y[i]),
            predicted_ortg=float(predicted[i]),
            normalized_actual=float(norm_actual[i]),
            normalized_predicted=float(norm_pred[i]),
        )
        for i in range(n)
    ]
    return EvalReport(
        model_kind=model_kind,
        k=k,
        fit_scope=fit_scope,
        seed=cfg.seed,
        hidden_shape=tuple(hidden_shape) if model_kind == "mlp" else None,
        rmse_normalized=rmse(norm_pred - norm_actual),
        rmse_ortg=rmse(predicted - y),
        r_squared=r_squared(y, predicted),
        folds=folds,
    )


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def report_to_json_bytes(report: EvalReport) -> bytes:
    doc = {
        "model_kind": report.model_kind,
        "k": report.k,
        "fit_scope": report.fit_scope,
        "seed": report.seed,
        "shape": list(report.hidden_shape) if report.hidden_shape else None,
        "rmse_normalized": report.rmse_normalized,
        "rmse_ortg": report.rmse_ortg,
        "r_squared": report.r_squared,
        "folds": [
            {
                "index": f.index,
                "season": f.season,
                "team": f.team,
                "actual_ortg": f.actual_ortg,
                "predicted_ortg": f.predicted_ortg,
            }
            for f in report.folds
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def predicted_vs_actual_csv_bytes(report: EvalReport) -> bytes:
    out = io.StringIO()
    out.write("season,team,actual_ortg,predicted_ortg\n")
    for f in report.folds:
        out.write(f"{f.season},{f.team},{f.actual_ortg!r},{f.predicted_ortg!r}\n")
    return out.getvalue().encode("utf-8")


def write_eval_report(report: EvalReport, json_path: str | Path) -> None:
    """Write the JSON report plus the sibling predicted_vs_actual.csv."""
    json_path = Path(json_path)
    atomic_write_bytes(json_path, report_to_json_bytes(report))
    atomic_write_bytes(
        json_path.parent / "predicted_vs_actual.csv",
        predicted_vs_actual_csv_bytes(report),
    )

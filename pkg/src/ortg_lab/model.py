"""Predictors over principal coordinates: least-squares linear regression and
a rectifier MLP, plus training, input gradients, architecture search, and the
versioned model-file format.

Both model classes operate in normalized space (min-max features -> PCA
coordinates in, min-max ORTG out); ``TrainedPredictor`` composes them with
the fitted pipeline into the single raw-features -> ORTG-points code path
shared by the CLI, the evaluation harness, and the HTTP service.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import FitError, ModelIOError
from .features import N_FEATURES
from .fileio import atomic_write_bytes, created_at_timestamp
from .ingest import Dataset
from .transform import MinMaxNormalizer, PcaModel, TransformPipeline, fit_pipeline

MODEL_SCHEMA_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class LinearModel:
    """y = weights . x + bias over principal coordinates."""

    weights: np.ndarray  # (k,)
    bias: float

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]

    def predict(self, x: np.ndarray) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return float(x @ self.weights + self.bias)
        return x @ self.weights + self.bias

    def input_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.weights.copy()


def fit_linear_least_squares(inputs: np.ndarray, targets: np.ndarray) -> LinearModel:
    """Minimum-norm least squares via SVD (``numpy.linalg.lstsq``)."""
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.asarray(targets, dtype=np.float64)
    if X.shape[0] < 2:
        raise FitError(f"need at least 2 samples, got {X.shape[0]}")
    if X.shape[0] != y.shape[0]:
        raise FitError(f"{X.shape[0]} inputs vs {y.shape[0]} targets")
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearModel(weights=coef[:-1], bias=float(coef[-1]))


@dataclass
class MlpModel:
    """Feed-forward network, rectifier hidden layers, linear output.

    Parameters live in one flat vector packed layer by layer (row-major
    weights, then biases) so the numba kernels can run on any layer stack.
    """

    layer_sizes: tuple[int, ...]
    params: np.ndarray
    final_loss: float = float("nan")
    aborted_restarts: int = 0

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        sizes = self.sizes_array
        expected = kernels.param_count(sizes)
        if self.params.shape != (expected,):
            raise ValueError(
                f"packed parameter vector has {self.params.shape[0]} entries, "
                f"layer sizes {self.layer_sizes} need {expected}"
            )

    @property
    def sizes_array(self) -> np.ndarray:
        return np.asarray(self.layer_sizes, dtype=np.int64)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    def weight_matrices(self) -> list[np.ndarray]:
        offs = kernels.layer_offsets(self.sizes_array)
        out = []
        for l in range(len(self.layer_sizes) - 1):
            a, b = self.layer_sizes[l], self.layer_sizes[l + 1]
            out.append(self.params[offs[l]:offs[l] + a * b].reshape(a, b).copy())
        return out

    def bias_vectors(self) -> list[np.ndarray]:
        offs = kernels.layer_offsets(self.sizes_array)
        out = []
        for l in range(len(self.layer_sizes) - 1):
            a, b = self.layer_sizes[l], self.layer_sizes[l + 1]
            out.append(self.params[offs[l] + a * b:offs[l] + a * b + b].copy())
        return out

    def predict(self, x: np.ndarray) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            if x.shape[0] != self.input_dim:
                raise ValueError(f"expected {self.input_dim} inputs, got {x.shape[0]}")
            return float(
                kernels.mlp_forward_batch(self.params, self.sizes_array, x.reshape(1, -1))[0]
            )
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} inputs, got {x.shape[1]}")
        return kernels.mlp_forward_batch(self.params, self.sizes_array, x)

    def input_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected shape ({self.input_dim},), got {x.shape}")
        return kernels.mlp_input_grad(self.params, self.sizes_array, x)


def mlp_forward(model: MlpModel, x: np.ndarray) -> float:
    return model.predict(np.asarray(x, dtype=np.float64))


@dataclass
class TrainConfig:
    # lr 1e-2: full-batch Adam at 1e-3 stalls around MSE 2e-3 on noiseless
    # linear targets within the epoch budget; 1e-2 reaches <1e-5.
    seed: int = 0
    learning_rate: float = 1e-2
    max_epochs: int = 2000
    plateau_tolerance: float = 1e-6
    plateau_patience: int = 50
    restarts: int = 5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1 or self.plateau_patience < 1 or self.restarts < 1:
            raise ValueError("max_epochs, plateau_patience, restarts must be >= 1")
        if self.plateau_tolerance <= 0:
            raise ValueError("plateau_tolerance must be positive")


def _glorot_uniform_init(sizes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Packed Glorot-uniform weights with zero biases."""
    params = np.zeros(kernels.param_count(sizes), dtype=np.float64)
    offs = kernels.layer_offsets(sizes)
    for l in range(len(sizes) - 1):
        a, b = int(sizes[l]), int(sizes[l + 1])
        limit = math.sqrt(6.0 / (a + b))
        params[offs[l]:offs[l] + a * b] = rng.uniform(-limit, limit, size=a * b)
    return params


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    # Restart r draws the same stream regardless of the total restart count,
    # so restarts=5 is a strict superset of restarts=1.
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(restart,))
    )


def mlp_train(
    inputs: np.ndarray,
    targets: np.ndarray,
    shape: tuple[int, ...],
    cfg: TrainConfig,
) -> MlpModel:
    """Full-batch Adam with seeded Glorot restarts; keeps the lowest final
    training loss. Deterministic given ``cfg.seed``.

    Restarts whose loss goes non-finite are dropped; if every restart
    aborts, raises FitError.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.asarray(targets, dtype=np.float64)
    if X.shape[0] < 2:
        raise FitError(f"need at least 2 samples, got {X.shape[0]}")
    shape = tuple(int(s) for s in shape)
    if shape[0] != X.shape[1] or shape[-1] != 1:
        raise FitError(
            f"layer sizes {shape} must start at the input dimension "
            f"{X.shape[1]} and end at 1"
        )
    sizes = np.asarray(shape, dtype=np.int64)

    best_params = None
    best_loss = np.inf
    loss_hist = np.empty(cfg.max_epochs, dtype=np.float64)
    aborted = 0
    for r in range(cfg.restarts):
        params = _glorot_uniform_init(sizes, _restart_rng(cfg.seed, r))
        final_loss, _epochs, ok = kernels.adam_train(
            params, sizes, X, y,
            cfg.learning_rate, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
            cfg.max_epochs, cfg.plateau_tolerance, cfg.plateau_patience,
            loss_hist,
        )
        if not ok:
            aborted += 1
            continue
        if final_loss < best_loss:
            best_loss = final_loss
            best_params = params
    if best_params is None:
        raise FitError(f"all {cfg.restarts} restarts diverged to non-finite loss")

    return MlpModel(
        layer_sizes=shape, params=best_params,
        final_loss=best_loss, aborted_restarts=aborted,
    )


@dataclass
class TrainedPredictor:
    """Fitted pipeline + model: the end-to-end map from a raw 48-feature
    profile to ORTG points."""

    pipeline: TransformPipeline
    model: LinearModel | MlpModel
    metadata: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "linear" if isinstance(self.model, LinearModel) else "mlp"

    def predict_ortg(self, x: np.ndarray) -> float:
        """Single profile (48,) -> ORTG points."""
        z = self.pipeline.forward(np.asarray(x, dtype=np.float64))
        return self.pipeline.denormalize_target(self.model.predict(z))

    def predict_ortg_batch(self, X: np.ndarray) -> np.ndarray:
        z = self.pipeline.forward(np.asarray(X, dtype=np.float64))
        norm = np.asarray(self.model.predict(z), dtype=np.float64)
        return norm * self.pipeline.target_range + self.pipeline.target_normalizer.mins[0]

    def predict_normalized(self, x: np.ndarray) -> float:
        return float(self.model.predict(self.pipeline.forward(x)))

    def input_gradient(self, x: np.ndarray) -> np.ndarray:
        """Exact chain-rule gradient of predicted ORTG w.r.t. the 48 raw
        features."""
        z = self.pipeline.forward(np.asarray(x, dtype=np.float64))
        g_coords = self.model.input_gradient(z)
        jac = self.pipeline.jacobian()
        return self.pipeline.target_range * (jac.T @ g_coords)


def predictor_gradient_input(p: TrainedPredictor, x: np.ndarray) -> np.ndarray:
    return p.input_gradient(x)


def train_predictor(
    data: Dataset,
    kind: str,
    k: int,
    cfg: TrainConfig,
    hidden_shape: tuple[int, ...] = (3,),
) -> TrainedPredictor:
    """Fit the pipeline on the full dataset, then the requested model on the
    transformed samples."""
    if len(data) < 2:
        raise FitError(f"need at least 2 rows, got {len(data)}")
    X = data.feature_matrix()
    y = data.ortg_array()
    pipeline = fit_pipeline(X, y, k)
    Z = pipeline.forward(X)
    y_norm = pipeline.target_normalizer.apply(y.reshape(-1, 1)).ravel()

    if kind == "linear":
        model = fit_linear_least_squares(Z, y_norm)
        resid = model.predict(Z) - y_norm
        final_loss = float(np.mean(resid * resid))
    elif kind == "mlp":
        shape = (k,) + tuple(hidden_shape) + (1,)
        model = mlp_train(Z, y_norm, shape, cfg)
        final_loss = float(model.final_loss)
    else:
        raise ValueError(f"unknown model kind {kind!r}")

    meta = {
        "seed": cfg.seed,
        "restarts": cfg.restarts,
        "final_loss": final_loss,
        "dataset_fingerprint": data.fingerprint(),
        "created_at": created_at_timestamp(),
    }
    return TrainedPredictor(pipeline=pipeline, model=model, metadata=meta)


def search_mlp_architecture(
    data: Dataset,
    candidates: list[tuple[int, ...]],
    cfg: TrainConfig,
    k: int = 18,
    fit_scope: str = "global",
    threads: int | None = None,
) -> list[tuple[tuple[int, ...], float]]:
    """LOOCV every hidden-layer candidate; rank ascending by RMSE (ORTG
    points), ties by parameter count then lexicographic shape."""
    from .evaluate import run_loocv

    if not candidates:
        raise ValueError("no candidate shapes given")
    results = []
    for shape in candidates:
        shape = tuple(int(s) for s in shape)
        report = run_loocv(
            data, "mlp", k=k, cfg=cfg, fit_scope=fit_scope,
            hidden_shape=shape, threads=threads,
        )
        full = (k,) + shape + (1,)
        n_params = kernels.param_count(np.asarray(full, dtype=np.int64))
        results.append((shape, report.rmse_ortg, n_params))
    results.sort(key=lambda t: (t[1], t[2], t[0]))
    return [(shape, rmse) for shape, rmse, _ in results]


# ---------------------------------------------------------------------------
# Model file format (versioned JSON)
# ---------------------------------------------------------------------------

def _pipeline_to_doc(p: TransformPipeline) -> dict:
    return {
        "feature_normalizer": {
            "mins": p.feature_normalizer.mins.tolist(),
            "maxs": p.feature_normalizer.maxs.tolist(),
        },
        "target_normalizer": {
            "min": float(p.target_normalizer.mins[0]),
            "max": float(p.target_normalizer.maxs[0]),
        },
        "pca": {
            "mean": p.pca.mean.tolist(),
            "scale": p.pca.scale.tolist(),
            "components": p.pca.components.tolist(),
            "explained_variance": p.pca.explained_variance.tolist(),
            "degenerate_features": list(p.pca.degenerate_features),
        },
    }


def _pipeline_from_doc(doc: dict) -> TransformPipeline:
    fn = doc["feature_normalizer"]
    tn = doc["target_normalizer"]
    pc = doc["pca"]
    return TransformPipeline(
        feature_normalizer=MinMaxNormalizer(
            mins=np.asarray(fn["mins"], dtype=np.float64),
            maxs=np.asarray(fn["maxs"], dtype=np.float64),
        ),
        target_normalizer=MinMaxNormalizer(
            mins=np.asarray([tn["min"]], dtype=np.float64),
            maxs=np.asarray([tn["max"]], dtype=np.float64),
        ),
        pca=PcaModel(
            mean=np.asarray(pc["mean"], dtype=np.float64),
            scale=np.asarray(pc["scale"], dtype=np.float64),
            components=np.asarray(pc["components"], dtype=np.float64),
            explained_variance=np.asarray(pc["explained_variance"], dtype=np.float64),
            degenerate_features=tuple(pc.get("degenerate_features", ())),
        ),
    )


def predictor_to_json_bytes(p: TrainedPredictor) -> bytes:
    if isinstance(p.model, LinearModel):
        parameters = {
            "weights": p.model.weights.tolist(),
            "bias": float(p.model.bias),
        }
    else:
        parameters = {
            "layer_sizes": list(p.model.layer_sizes),
            "weights": [w.tolist() for w in p.model.weight_matrices()],
            "biases": [b.tolist() for b in p.model.bias_vectors()],
        }
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "pipeline": _pipeline_to_doc(p.pipeline),
        "model_kind": p.kind,
        "parameters": parameters,
        "metadata": p.metadata,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def save_model(p: TrainedPredictor, path: str | Path) -> None:
    atomic_write_bytes(path, predictor_to_json_bytes(p))


def load_model(path: str | Path) -> TrainedPredictor:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelIOError(f"cannot read model file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelIOError(f"model file {path} is not valid JSON: {exc}") from exc

    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelIOError(
            f"model file schema version {version!r} unsupported; "
            f"this build reads version {MODEL_SCHEMA_VERSION}"
        )
    try:
        pipeline = _pipeline_from_doc(doc["pipeline"])
        kind = doc["model_kind"]
        parameters = doc["parameters"]
        if kind == "linear":
            model = LinearModel(
                weights=np.asarray(parameters["weights"], dtype=np.float64),
                bias=float(parameters["bias"]),
            )
        elif kind == "mlp":
            sizes = np.asarray(parameters["layer_sizes"], dtype=np.int64)
            params = np.zeros(kernels.param_count(sizes), dtype=np.float64)
            offs = kernels.layer_offsets(sizes)
            for l, (w, b) in enumerate(zip(parameters["weights"], parameters["biases"])):
                a, bdim = int(sizes[l]), int(sizes[l + 1])
                w = np.asarray(w, dtype=np.float64)
                b = np.asarray(b, dtype=np.float64)
                if w.shape != (a, bdim) or b.shape != (bdim,):
                    raise ModelIOError(
                        f"layer {l} parameter shapes {w.shape}/{b.shape} do not "
                        f"match layer sizes {tuple(int(s) for s in sizes)}"
                    )
                params[offs[l]:offs[l] + a * bdim] = w.reshape(-1)
                params[offs[l] + a * bdim:offs[l] + a * bdim + bdim] = b
            model = MlpModel(layer_sizes=tuple(int(s) for s in sizes), params=params)
        else:
            raise ModelIOError(f"unknown model_kind {kind!r}")
        metadata = doc.get("metadata", {})
    except ModelIOError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelIOError(f"model file {path} is malformed: {exc}") from exc

    for arr in (pipeline.feature_normalizer.mins, pipeline.feature_normalizer.maxs,
                pipeline.pca.mean, pipeline.pca.scale,
                pipeline.pca.components, pipeline.pca.explained_variance):
        if not np.all(np.isfinite(arr)):
            raise ModelIOError(f"model file {path} contains non-finite numerics")
    if isinstance(model, LinearModel):
        if not (np.all(np.isfinite(model.weights)) and math.isfinite(model.bias)):
            raise ModelIOError(f"model file {path} contains non-finite numerics")
    elif not np.all(np.isfinite(model.params)):
        raise ModelIOError(f"model file {path} contains non-finite numerics")

    return TrainedPredictor(pipeline=pipeline, model=model, metadata=metadata)

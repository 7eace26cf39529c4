"""ortg-lab: model NBA team offensive rating from eight-playtype profiles and
optimize gameplans against the fitted predictor."""

from .features import (
    ALL_KEYS,
    FEATURE_NAMES,
    FREQ_INDICES,
    FeatureKey,
    MetricKind,
    N_FEATURES,
    PlaytypeKind,
)
from .ingest import (
    Dataset,
    GroundTruth,
    SyntheticSpec,
    TeamSeasonRow,
    compute_ortg,
    generate_synthetic_dataset,
    parse_dataset_csv,
    serialize_dataset_csv,
)
from .transform import (
    MinMaxNormalizer,
    PcaModel,
    TransformPipeline,
    fit_minmax,
    fit_pca,
    fit_pipeline,
)
from .model import (
    LinearModel,
    MlpModel,
    TrainConfig,
    TrainedPredictor,
    fit_linear_least_squares,
    load_model,
    mlp_forward,
    mlp_train,
    predictor_gradient_input,
    save_model,
    search_mlp_architecture,
    train_predictor,
)
from .evaluate import EvalReport, FoldResult, r_squared, rmse, run_loocv
from .optimize import (
    FeasibleRegion,
    GameplanCandidate,
    SensitivityReport,
    derive_feasible_region,
    hypothesis_check,
    optimize_gameplan,
    project_feasible,
    sensitivity_rank,
)

__version__ = "0.1.0"

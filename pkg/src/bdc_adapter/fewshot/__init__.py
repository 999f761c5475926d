"""Few-shot classification: BDC prototypes, fusion with the reasoning head, evaluation."""

from .episode import Episode
from .evaluation import (
    ABLATION_ROWS,
    ROW_MRN_BDC,
    ROW_MRN_INIT,
    ROW_MRN_NO_INIT,
    AblationResult,
    AccuracyReport,
    bdc_only_accuracy,
    build_model,
    confusion_matrix,
    evaluate,
    grid_search,
    mean_embedding_baseline,
    run_ablation,
    train_head,
    zero_shot_accuracy,
)
from .inference import (
    AdapterModel,
    FusionConfig,
    Prediction,
    fuse,
    predict,
    prototype_scores,
    zero_shot_scores,
)
from .prototypes import (
    PrototypeSet,
    average_prototype,
    build_prototypes,
    fit_episode_projection,
    image_bdc_vector,
)

__all__ = [
    "ABLATION_ROWS",
    "ROW_MRN_BDC",
    "ROW_MRN_INIT",
    "ROW_MRN_NO_INIT",
    "AblationResult",
    "AccuracyReport",
    "AdapterModel",
    "Episode",
    "FusionConfig",
    "Prediction",
    "PrototypeSet",
    "average_prototype",
    "bdc_only_accuracy",
    "build_model",
    "build_prototypes",
    "confusion_matrix",
    "evaluate",
    "fit_episode_projection",
    "fuse",
    "grid_search",
    "image_bdc_vector",
    "mean_embedding_baseline",
    "predict",
    "prototype_scores",
    "run_ablation",
    "train_head",
    "zero_shot_accuracy",
    "zero_shot_scores",
]

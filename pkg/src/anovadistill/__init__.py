"""Distill black-box tabular predictors into interpretable functional ANOVA surrogates.

The pipeline has three stages: screen the features and interactions that the
black box actually uses (derivative-based scores with Apriori-style level-wise
pruning), fit a sparse functional ANOVA surrogate to the black box's outputs,
and report component importances, per-feature attributions and
partial-dependence tables.
"""

from anovadistill.data import (
    Dataset,
    FeatureSpec,
    IndexSet,
    ancestors,
    load_csv,
    scale_point,
    unscale_point,
)
from anovadistill.predictor import (
    CallablePredictor,
    LookupPredictor,
    Predictor,
    PredictorError,
)
from anovadistill.suite import (
    AnalyticPredictor,
    SUITE_NAMES,
    make_analytic,
    true_interaction_pairs,
)
from anovadistill.stencil import (
    binary_partial_difference,
    central_difference,
    mixed_difference,
)
from anovadistill.scores import (
    ImportanceTable,
    McConfig,
    interaction_score,
    pair_strength,
    score_batch,
    total_effect_score,
)
from anovadistill.screening import (
    ScreeningConfig,
    ScreeningResult,
    brute_force_screen,
    screen_features,
    screen_interactions,
)
from anovadistill.model import (
    AnovaModel,
    ComponentSpec,
    FitConfig,
    FitError,
    anova_shap_global,
    anova_shap_local,
    component_importance,
    fit,
    identifiable_transform,
    partial_dependence,
)
from anovadistill.external import ExternalPredictor, spawn_external

__version__ = "0.1.0"

__all__ = [
    "AnalyticPredictor",
    "AnovaModel",
    "CallablePredictor",
    "ComponentSpec",
    "Dataset",
    "ExternalPredictor",
    "FeatureSpec",
    "FitConfig",
    "FitError",
    "ImportanceTable",
    "IndexSet",
    "LookupPredictor",
    "McConfig",
    "Predictor",
    "PredictorError",
    "SUITE_NAMES",
    "ScreeningConfig",
    "ScreeningResult",
    "ancestors",
    "anova_shap_global",
    "anova_shap_local",
    "binary_partial_difference",
    "brute_force_screen",
    "central_difference",
    "component_importance",
    "fit",
    "identifiable_transform",
    "interaction_score",
    "load_csv",
    "make_analytic",
    "mixed_difference",
    "pair_strength",
    "partial_dependence",
    "scale_point",
    "score_batch",
    "screen_features",
    "screen_interactions",
    "spawn_external",
    "total_effect_score",
    "true_interaction_pairs",
    "unscale_point",
]

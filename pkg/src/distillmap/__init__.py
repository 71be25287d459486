"""Distill a black-box classifier's prediction vectors into an explorable 2-D map."""

from .confidence import (
    ConfidenceModel,
    RejectionCurve,
    entropy_model,
    fit_dmm,
    fit_gmm,
    fit_kde,
    rejection_curve,
    score,
)
from .contour import ContourSet, trace_contour
from .dataio import RunArtifact, build_artifact, export_run, load_artifact, load_predictions
from .fidelity import MetricsReport, compression_quality, confusion_matrix, jsd, local_fidelity
from .model_core import (
    EmbeddingTable,
    PredictionTable,
    StudentParams,
    SubsetMask,
    TrainConfig,
    apply_subset_mask,
    apply_temperature,
    predictive_entropy,
    student_marginal,
    student_posterior,
    subset_table,
    t_log_density,
)
from .objective import GradientBundle, LossReport, gradients, loss, sym_kl
from .svd_variant import SvdModel, fit_svd, svd_student_posterior, teacher_agreement
from .synth import synth_teacher
from .trainer import AdamState, TrainTrace, anneal_temperature, initialize, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ConfidenceModel",
    "ContourSet",
    "EmbeddingTable",
    "GradientBundle",
    "LossReport",
    "MetricsReport",
    "PredictionTable",
    "RejectionCurve",
    "RunArtifact",
    "StudentParams",
    "SubsetMask",
    "SvdModel",
    "TrainConfig",
    "TrainTrace",
    "anneal_temperature",
    "apply_subset_mask",
    "apply_temperature",
    "build_artifact",
    "compression_quality",
    "confusion_matrix",
    "entropy_model",
    "export_run",
    "fit_dmm",
    "fit_gmm",
    "fit_kde",
    "fit_svd",
    "gradients",
    "initialize",
    "jsd",
    "load_artifact",
    "load_predictions",
    "local_fidelity",
    "loss",
    "predictive_entropy",
    "rejection_curve",
    "score",
    "student_marginal",
    "student_posterior",
    "subset_table",
    "svd_student_posterior",
    "sym_kl",
    "synth_teacher",
    "t_log_density",
    "teacher_agreement",
    "trace_contour",
    "train",
]

"""Penalized convolution-smoothed quantile regression.

The check loss is smoothed by convolution with a kernel density, giving a
differentiable convex objective fitted by an adaptive majorize-minimization
loop with closed-form proximal updates for the lasso, elastic-net,
group-lasso, and sparse-group-lasso penalties.  Regularization paths,
cross-validation, a fused-lasso additive model, and a simulation harness sit
on top; the ``smoothq`` command exposes them from the shell.
"""

from .kernels import (KERNELS, SmoothingSpec, check_loss, default_bandwidth,
                      kernel_cdf, kernel_density, smoothed_loss,
                      smoothed_loss_derivative)
from .objective import (CumSumDesign, Dataset, DenseDesign, check_loss_total,
                        gradient, loss_and_gradient, loss_value, residuals)
from .penalties import (ElasticNet, GroupLasso, GroupStructure, PenaltyTemplate,
                        SparseGroupLasso, WeightedLasso, penalty_value,
                        prox_step, soft_threshold)
from .solver import (FitResult, SolverConfig, SolverError, kkt_residual,
                     lamm_fit, surrogate_value)
from .tuning import (CvResult, LambdaPath, cross_validate, fit_path,
                     intercept_only, lambda_max, make_folds, one_se_index)
from .flam import (FlamFit, difference_design, fit_flam, flam_objective,
                   fused_penalty, predict_flam, solve_fused_block)
from .simulation import (Metrics, MethodSpec, ReplicationSummary, SimDesign,
                         compute_metrics, covariance_matrix, generate,
                         group_structure, run_replication, run_replications,
                         t_quantile, true_beta)
from .dataio import (IngestError, emit_plot_data, ingest_csv, read_plot_data,
                     write_dataset_csv)
from .rng import FOLD_STREAM_BASE, fisher_yates, make_generator

__version__ = "0.1.0"

__all__ = [
    "KERNELS", "SmoothingSpec", "check_loss", "default_bandwidth",
    "kernel_cdf", "kernel_density", "smoothed_loss", "smoothed_loss_derivative",
    "CumSumDesign", "Dataset", "DenseDesign", "check_loss_total", "gradient",
    "loss_and_gradient", "loss_value", "residuals",
    "ElasticNet", "GroupLasso", "GroupStructure", "PenaltyTemplate",
    "SparseGroupLasso", "WeightedLasso", "penalty_value", "prox_step",
    "soft_threshold",
    "FitResult", "SolverConfig", "SolverError", "kkt_residual", "lamm_fit",
    "surrogate_value",
    "CvResult", "LambdaPath", "cross_validate", "fit_path", "intercept_only",
    "lambda_max", "make_folds", "one_se_index",
    "FlamFit", "difference_design", "fit_flam", "flam_objective",
    "fused_penalty", "predict_flam", "solve_fused_block",
    "Metrics", "MethodSpec", "ReplicationSummary", "SimDesign",
    "compute_metrics", "covariance_matrix", "generate", "group_structure",
    "run_replication", "run_replications", "t_quantile", "true_beta",
    "IngestError", "emit_plot_data", "ingest_csv", "read_plot_data",
    "write_dataset_csv",
    "FOLD_STREAM_BASE", "fisher_yates", "make_generator",
    "__version__",
]

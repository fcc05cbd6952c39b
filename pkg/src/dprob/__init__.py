"""Divergence-based model weights for linear models against a GP reference.

The package computes absolute and conditional model weights of the form
``exp(-n KL)``, where KL is an analytic estimate of the Kullback-Leibler
divergence between a candidate linear model and a Gaussian-process
regression reference, alongside classical Bayesian model probabilities and
exponential weighting, with a simulation harness and a bundled ozone
dataset pipeline.
"""

from .data import DataError, Dataset, SplitPlan, from_arrays, load_csv, split
from .kernel import (KernelConfig, KernelError, ReferenceFit, build_kernel,
                     cross_kernel, fit_reference, log_marginal)
from .hyper import (EBResult, McmcTrace, average_kl_over_trace, optimize_eb,
                    sample_mcmc)
from .models import (CandidateModel, ModelFit, RankDeficiencyError,
                     design_matrix, enumerate_subsets, fit_candidate)
from .engine import (KlEstimate, WeightReport, evidence_label, kl1_analytic,
                     kl2_analytic, kl_estimate, make_report)
from .baselines import (BaselineWeights, bic_weight_scores, exponential_weights,
                        gprior_log_marginal, gprior_weight_scores)
from .predict import (PredictionSet, aggregate, effective_models,
                      predict_linear, predict_reference, rmse, select_top)
from .simulate import (DeltaOracle, SimScenario, boltzmann_check,
                       decision_rule_check, delta_oracle, generate,
                       mean_function, run_replications)
from .cli import ozone_dataset, split_study, weight_study

__version__ = "0.1.0"

__all__ = [
    "DataError", "Dataset", "SplitPlan", "from_arrays", "load_csv", "split",
    "KernelConfig", "KernelError", "ReferenceFit", "build_kernel",
    "cross_kernel", "fit_reference", "log_marginal",
    "EBResult", "McmcTrace", "average_kl_over_trace", "optimize_eb",
    "sample_mcmc",
    "CandidateModel", "ModelFit", "RankDeficiencyError", "design_matrix",
    "enumerate_subsets", "fit_candidate",
    "KlEstimate", "WeightReport", "evidence_label", "kl1_analytic",
    "kl2_analytic", "kl_estimate", "make_report",
    "BaselineWeights", "bic_weight_scores", "exponential_weights",
    "gprior_log_marginal", "gprior_weight_scores",
    "PredictionSet", "aggregate", "effective_models", "predict_linear",
    "predict_reference", "rmse", "select_top",
    "DeltaOracle", "SimScenario", "boltzmann_check", "decision_rule_check",
    "delta_oracle", "generate", "mean_function", "run_replications",
    "ozone_dataset", "split_study", "weight_study",
    "__version__",
]

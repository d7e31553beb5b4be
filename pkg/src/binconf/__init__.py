"""Conformal prediction for regression via a binned softmax density.

The label range is cut into equally spaced bins, a softmax network is
trained with an entropy-regularized expected-distance loss, and its
linearly interpolated density serves as the conformity score for split
conformal calibration. Prediction sets are superlevel sets of that
interpolant and may consist of several disjoint intervals.
"""

from .conformal import (
    CalibrationResult,
    calibrate,
    conformity_scores,
    coverage_mc_check,
    predict_set,
    predict_sets,
)
from .data import (
    Dataset,
    SplitSpec,
    gen_bimodal,
    gen_heteroscedastic,
    gen_lei_fork,
    gen_lognormal,
    load_csv,
    split,
    standardize,
)
from .density import DiscreteDensity, PredictionSet, interpolate, point_predict, set_length, superlevel_set
from .grid import Grid, build_grid, nearest_bin
from .loss import LossConfig, distance_weights, entropy, per_sample_logit_gradient, per_sample_loss
from .model import ModelConfig, ModelState, OptimizerConfig, forward, init_model
from .pipeline import AbsResidualBaseline, BinnedConformalRegressor, PipelineConfig, baseline_abs_residual

__version__ = "0.1.0"

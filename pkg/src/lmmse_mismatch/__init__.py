"""LMMSE estimation under model-order mismatch with Gaussian regressors.

Closed-form expected MSE of the reduced-order estimator, exact conditional
MSE evaluation and reproducible Monte Carlo sweeps over ``(p_S, n)``.
"""

__version__ = "0.1.0"

from .analytic import (
    TheoryInputs,
    expected_mse_corollary1,
    expected_mse_theorem1,
    gamma,
    monotonicity_threshold,
    snr_db,
    whole_vector_expected_mse,
)
from .estimator import (
    full_lmmse_weights,
    mse_full,
    mse_partial_conditional,
    mse_partial_pinv_form,
    mse_whole_vector,
    oracle_partial_weights,
    partial_lmmse_weights,
)
from .experiment import ScenarioConfig, SweepRecord, run_cell, run_sweep, scenario_config
from .model import AssumedModelSpec, PartitionedCovariance, SystemDraw, SystemSpec, draw_system, partition
from .numkit import (
    InvalidCovarianceError,
    InvalidInputError,
    RandomStream,
    pseudoinverse,
    sample_gaussian_matrix,
    sample_gaussian_vector,
)

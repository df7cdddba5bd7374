"""Spin squeezing of a lossy two-mode Bose-Einstein condensate.

The package computes the squeezing parameter xi^2 produced by twisting
dynamics in the presence of one-, two- and three-body losses along
three mutually validating routes: exact and constant-rate analytics
(module analytic), large-N asymptotic optima (analytic, physical), and
Monte Carlo wavefunction trajectories (mcwf) cross-checked against a
brute-force master-equation integrator (master).  Module physical maps
laboratory parameters onto the model and optimizes over trap frequency,
atom number and time; module cli exposes everything as batch commands.

Hot kernels live in a compiled extension with a pure Python fallback;
set SPINSQZ_KERNELS=py|cy to force one (see module backend).
"""

__version__ = "0.1.0"

from .analytic import (AsymptoticInputs, DomainError, MinimizeResult,
                       best_time_and_xi2, c_param, f_of_c,
                       f_log_derivatives, gamma_sq_rate, lost_rates,
                       minimize_xi2_over_t, moments_constant_rate,
                       survival_xi2, xi2_asymptotic,
                       xi2_asymptotic_penalty, xi2_constant_rate,
                       xi2_lossless_asymptotic, xi2_one_body_exact)
from .backend import KERNELS_NAME
from .fock import (MeanSpinCollapsedError, ModelParams, MomentSet,
                   SqueezingResult, TwoModeSector, moment_set_from_vector,
                   moments, phase_state, xi2_from_moments)
from .master import DensityMatrix, integrate_master, var_sz_check
from .mcwf import (CHANNEL_NAMES, CHANNELS, EnsembleStats, TrajectoryConfig,
                   TrajectoryResult, apply_jump, decay_rate, propagate,
                   run_ensemble, run_trajectory, sample_jump_time)
from .physical import (HBAR, Optimum, PhysicalParams, TFDerived,
                       closed_form_coefficients, closed_form_optimum,
                       feshbach_scan, omega_opt, optimize_all, read_k3_table,
                       scan_n, tf_map, xi2_floor)

__all__ = [
    "__version__", "KERNELS_NAME",
    # fock
    "ModelParams", "TwoModeSector", "MomentSet", "SqueezingResult",
    "MeanSpinCollapsedError", "phase_state", "moments",
    "moment_set_from_vector", "xi2_from_moments",
    # analytic
    "DomainError", "AsymptoticInputs", "MinimizeResult", "lost_rates",
    "gamma_sq_rate", "c_param", "f_of_c", "xi2_one_body_exact",
    "f_log_derivatives", "moments_constant_rate", "xi2_constant_rate",
    "xi2_lossless_asymptotic", "xi2_asymptotic", "xi2_asymptotic_penalty",
    "best_time_and_xi2", "minimize_xi2_over_t", "survival_xi2",
    # mcwf
    "CHANNELS", "CHANNEL_NAMES", "TrajectoryConfig", "TrajectoryResult",
    "EnsembleStats", "decay_rate", "propagate", "sample_jump_time",
    "apply_jump", "run_trajectory", "run_ensemble",
    # master
    "DensityMatrix", "integrate_master", "var_sz_check",
    # physical
    "HBAR", "PhysicalParams", "TFDerived", "Optimum", "tf_map", "omega_opt",
    "xi2_floor", "closed_form_coefficients", "closed_form_optimum",
    "optimize_all", "scan_n", "read_k3_table", "feshbach_scan",
]

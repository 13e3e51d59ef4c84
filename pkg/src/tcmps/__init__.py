"""Stochastic matrix-product-state simulation of time-correlated dephasing.

Modules: ``noise`` (OU / ARMA angle streams), ``mps`` (states, gates,
sampling), ``circuit`` (nearest-neighbour QFT schedules), ``ensemble``
(trajectory averages and the return-probability benchmark), ``analysis``
(power-law fits, prediction and bounds), ``cli``.
"""

__version__ = "0.1.0"

from .analysis import (PowerLawFit, bound_check, delta_norm, estimate_p0,  # noqa: E402
                       exponent_crossover_report, fit_power_law_1d, fit_power_law_2d,
                       predict_infidelity)
from .circuit import bind_noise, inverse_schedule, place_noise_slots, qft_schedule  # noqa: E402
from .ensemble import (EnsembleConfig, EnsembleResult, return_probability_benchmark,  # noqa: E402
                       run_ensemble, run_trajectory)
from .kernels import BACKEND  # noqa: E402
from .mps import MPS, BitstringSampleSet, inner, product_state, random_mps, sample_bitstrings  # noqa: E402
from .noise import (ArmaModel, NoiseTrajectory, OUParams, analytic_psd, arma_from_ou,  # noqa: E402
                    dephasing_gate, generate_trajectory, integrated_power, noise_power_1q,
                    solve_alpha_for_power, solve_sigma_for_power, total_power)

__all__ = [
    "ArmaModel", "BACKEND", "BitstringSampleSet", "EnsembleConfig", "EnsembleResult", "MPS",
    "NoiseTrajectory", "OUParams", "PowerLawFit", "analytic_psd", "arma_from_ou", "bind_noise",
    "bound_check", "delta_norm", "dephasing_gate", "estimate_p0", "exponent_crossover_report",
    "fit_power_law_1d", "fit_power_law_2d", "generate_trajectory", "inner", "integrated_power",
    "inverse_schedule", "noise_power_1q", "place_noise_slots", "predict_infidelity", "product_state",
    "qft_schedule", "random_mps", "return_probability_benchmark", "run_ensemble", "run_trajectory",
    "sample_bitstrings", "solve_alpha_for_power", "solve_sigma_for_power", "total_power",
]

"""Simulation and verification lab for harmonizable fractional stable motion."""

from .errors import DomainError, HfsmError, NumericError, ParameterError, ResourceError
from .meyer import nu_poly, psi_hat, theta_hat, theta_time, WaveletSpec
from .kernel import KernelTable, build_table, cached_table, eval_psi, eval_psi_prime
from .lepage import (LePageDraw, a_alpha, draw_lepage, gaussian_sigma,
                     mu_alpha_eps, p_j, sample_g, sample_gammas, sample_zeta,
                     zeta_cdf)
from .coeffs import (CoeffField, binomial_counts, coeff_abel, coeff_direct,
                     coeff_field, lambdas, level_coefficients, partial_sums)
from .synth import PathEnsemble, SynthConfig, ensemble, k_window, synth_path
from .analysis import (ModulusReport, dyadic_scale_j0, ecf_scale_alpha,
                       fbm_davies_harte, kbar_j, modulus_profile, sas_samples,
                       self_similarity_check, wj_functional, wj_running_max,
                       wj_scale_regression)

__version__ = "0.1.0"

"""Samplers and closed-form laws for Brownian motion on its way to hitting
zero, with a Monte Carlo verification harness."""

from .analytic import (DensitySpec, max_tail, mills_integral_check,
                       q_asymptote, sqrt_tau_density, tau_cdf, tau_density,
                       tau_quantile, v_cdf, v_density, v_quantile,
                       v_tail_constant)
from .core import (BudgetExceededError, ConfigError, DegenerateLawError,
                   DomainError, ExperimentConfig, InsufficientDataError,
                   PathMeta, PathSample, RngStream, TimeGrid,
                   make_fraction_grid, refine_fraction_grid, split_stream,
                   uniform_grid)
from .samplers import (BesselBridgeSpec, MeanderSpec, sample_bessel_bridge,
                       sample_meander, sample_tau, sample_tau_batch,
                       sample_theorem1_rhs, sample_v_conditional_on_max,
                       sample_v_marginals, sample_v_path,
                       simulate_w_until_hit)
from .harness import (ExperimentResult, run_convergence_study,
                      run_sample_dump, run_tabulate, run_verify_conditionals,
                      run_verify_densities, run_verify_meander,
                      run_verify_theorem1)
from .stats import (EmpiricalDist, TestReport, chi2_binned, ecdf_eval,
                    kolmogorov_sf, ks_one_sample, ks_two_sample,
                    tail_exponent_fit)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

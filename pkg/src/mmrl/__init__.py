"""Haar-series simulation of multistable Riemann-Liouville fields and processes."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (AccuracyError, BracketError, ConfigError, DomainError, IterationError, MMRLError,
                     ProtocolError, ResourceError)
from .integrand import (Integrand, characteristic_function, haar_integrand, indicator, moment_bound_rhs,
                        power_integrand, quasi_norm, step_function, tail_bound_rhs)
from .kernel_haar import (HaarIndex, KernelPoint, coefficient_difference, dyadic_average, haar_coefficient,
                          kernel_eval, kernel_l1_norm, lemma_bound_check)
from .params import AlphaFunction, HurstFunction, build_alpha, build_hurst
from .sampler import (IncrementSheet, MartingaleTrace, epsilon_from_sheet, eta_from_sheet, martingale_trace,
                      sample_increment_sheet, sample_sas)
from .simulator import (ConvergenceReport, FieldGrid, FieldSample, PathSample, convergence_study, field_dyadic,
                        field_haar, layer_sum_abel, simulate_path)
from .validation import (CheckResult, ValidationReport, check_ecf, check_martingale_bound, check_moment,
                         check_rate, check_tail)

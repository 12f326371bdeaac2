"""Cylindrical Wiener processes and stochastic integrals at finite rank."""
from .cylmeasure import (CovOperator, GaussCylMeasure, ProbabilityEstimate, char_function,
                         cylinder_probability, empirical_char_check, image_covariance)
from .errors import ConfigError, InputError
from .integrate import (Integrand, IntegralSamples, basis_independence_check, covariance_check,
                        hilbert_agreement_check, induced_covariance, isometry_check, isometry_target,
                        ito_integral, martingale_check, random_rotation, vector_integral)
from .radon import (RadonVerdict, SpectralFamily, extension_verdict, hs_check, mc_partial_sum_check)
from .rkhs import RkhsFactor, adjoint_embed, build_rkhs, rkhs_property_suite, sample_pushforward
from .simulate import (CylPathEval, DriverPaths, TimeGrid, VecPathEval, eval_cyl_wiener, eval_vec_wiener,
                       gen_drivers, inject_drift, wiener_property_suite)
from .space import CylinderSet, Functional, SpaceSpec, norm, pair
from .stat import MCConfig, StatEntry, StatReport, corr_test, mean_se, normality_stat

__version__ = "0.1.0"

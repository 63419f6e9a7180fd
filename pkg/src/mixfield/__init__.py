"""Exact finite models of stationary N-tuplewise independent random fields
and their dependence coefficients."""
from .coefficients import CoefficientKind, CoefficientReport, windowed_coefficient
from .dependence import (JointTable, alpha_bruteforce, alpha_exact, csaki_fischer_join,
                         rho_svd, verify_csaki_fischer)
from .errors import *  # noqa: F401,F403
from .exact import FiniteDistribution, as_rational, dist_new, marginal, product
from .field import (FieldModel, Level, check_ntuplewise, joint_dist, joint_table,
                    lemma_3_1_field, lemma_4_1_field, lemma_4_2_field, theorem_1_4_field,
                    theorem_1_5_field)
from .nu import NuSpec, check_lemma_2_6, nu_dist, nu_marginal
from .plans import Claim, VerifyPlan, default_plan, run_plan
from .sampler import empirical_independence, sample_window, uniformize

__version__ = "0.1.0"

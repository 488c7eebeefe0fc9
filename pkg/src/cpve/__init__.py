"""Controlled branching processes in varying environments.

Monte Carlo and exact-propagation engines, extinction and survival criteria,
and the normalized process W_n = Z_n / r_n.
"""

from .control import (BinomialControl, Capped, ControlFamily, Identity,
                      Multiplier, PoissonControl, TabulatedControl)
from .criteria import (ConditionReport, LimitEvidence, Verdict, check_duality,
                       check_thm2, check_thm3, check_thm4, check_thm5,
                       criteria_bundle, find_eta, gamma_n, growth_rate_matrix)
from .exact import (BudgetError, TruncatedPMF, exact_moments, extinction_bounds,
                    propagate, transition_row)
from .laws import (Binomial, Deterministic, Geometric, Poisson, Tabulated,
                   ValidationError)
from .martingale import (build_normalizer, check_thm6_hypotheses, delta_sequence,
                         prop1_profile, second_moment_recursion,
                         supermartingale_check, w_statistics)
from .model import ModelFileError, ModelSpec, dumps_model, loads_model, parse_model_file
from .schedule import ExplicitSchedule, ParametricSchedule, constant_schedule
from .simulate import MCReport, monte_carlo, simulate_path, simulate_step

__version__ = "0.1.0"

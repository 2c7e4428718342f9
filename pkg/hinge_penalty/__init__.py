__version__ = '0.3.0'

from .certify import extract_multipliers, kkt_certificate, moreau_envelope, moreau_grad, prox_solve  # noqa: E402
from .create_instances import (build_instance, fairness_problem_from_data, fit_unconstrained,  # noqa: E402
                               instance_from_json, instance_to_json, make_exemplar_1d, make_fairness_instance,
                               make_fcco_instance, make_quadratic_instance)
from .estimator import msvr_gamma_prime, msvr_init, msvr_update, tracking_error  # noqa: E402
from .oracles import ConstrainedProblem, FccoObjective, NestedAbsHingeConstraint, eval_oracle, exact_full_eval  # noqa: E402
from .penalty import (PenaltyObjective, beta_lower_bound, derived_constants, hinge, hinge_subgrad,  # noqa: E402
                      penalty_subgrad_exact, penalty_value_exact)
from .regularity import frvp_min_singular, pl_regularity_estimate, slack_demo  # noqa: E402
from .schedules import schedule_from_theorem  # noqa: E402
from .solver import SolverConfig, select_output, solve, solve_setting1, solve_setting2  # noqa: E402

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .oracles import ConstrainedProblem, as_point

logger = logging.getLogger('hinge_penalty.penalty')

HINGE = 'hinge'
SQUARED_HINGE = 'squared_hinge'
PENALTY_KINDS = (HINGE, SQUARED_HINGE)


def hinge(z):
    return np.maximum(z, 0.0)


def hinge_subgrad(z):
    """1 where z > 0, else 0 (the value at the kink is 0)."""
    return np.where(np.asarray(z) > 0, 1.0, 0.0)


def penalty_weights(z, kind: str = HINGE):
    """Outer derivative xi of the penalty term at constraint value(s) z."""
    if kind == HINGE:
        return hinge_subgrad(z)
    if kind == SQUARED_HINGE:
        return 2.0 * hinge(z)
    raise InvalidArgumentError(f"Unknown penalty kind {kind!r}", kind=kind)


@dataclass(frozen=True)
class DerivedConstants:
    C: float
    L: float
    theta_default: float
    theta_fallback: bool = False


class PenaltyObjective:
    """
    Phi(x) = F(x) + (beta/m) sum_k [h_k(x)]_+          (hinge)
    Phi(x) = F(x) + (beta/m) sum_k [h_k(x)]_+^2        (squared_hinge)
    """

    def __init__(self, problem: ConstrainedProblem, beta: float, kind: str = HINGE):
        if kind not in PENALTY_KINDS:
            raise InvalidArgumentError(f"Unknown penalty kind {kind!r}", kind=kind)
        if not np.isfinite(beta) or beta < 0:
            raise InvalidArgumentError(f"beta must be a nonnegative finite number, got {beta}", beta=beta)
        self.problem = problem
        self.beta = float(beta)
        self.kind = kind

    @property
    def m(self) -> int:
        return self.problem.m

    def penalty_term(self, h_values: np.ndarray) -> float:
        clipped = hinge(np.asarray(h_values, dtype=float))
        if self.kind == SQUARED_HINGE:
            clipped = clipped ** 2
        return self.beta / self.m * float(np.sum(clipped))

    def multipliers_for(self, h_values: np.ndarray) -> np.ndarray:
        """lambda_k = beta xi_k / m implied by the penalty at the given constraint values."""
        return self.beta / self.m * penalty_weights(np.asarray(h_values, dtype=float), self.kind)

    def value(self, x) -> float:
        return penalty_value_exact(self, x)

    def subgrad(self, x) -> np.ndarray:
        return penalty_subgrad_exact(self, x)

    def value_and_subgrad(self, x):
        point = as_point(x, self.problem.dimension)
        f_value, f_grad = self.problem.exact_objective(point)
        h_values, jacobian = self.problem.exact_constraints(point)
        return f_value + self.penalty_term(h_values), f_grad + self.multipliers_for(h_values) @ jacobian

    def __repr__(self) -> str:
        return f"PenaltyObjective(problem='{self.problem.name}', beta={self.beta}, kind='{self.kind}')"


def penalty_value_exact(obj: PenaltyObjective, x) -> float:
    f_value, _ = obj.problem.exact_objective(x)
    h_values, _ = obj.problem.exact_constraints(x)
    return f_value + obj.penalty_term(h_values)


def penalty_subgrad_exact(obj: PenaltyObjective, x) -> np.ndarray:
    _, f_grad = obj.problem.exact_objective(x)
    h_values, jacobian = obj.problem.exact_constraints(x)
    return f_grad + obj.multipliers_for(h_values) @ jacobian


def derived_constants(obj: PenaltyObjective) -> DerivedConstants:
    constants = obj.problem.constants
    C = constants.rho0 + obj.beta * constants.rho1
    L = constants.lipschitz_f + obj.beta * constants.lipschitz_h
    if C <= 0:
        logger.warning(f"Penalty for '{obj.problem.name}' has weak-convexity constant 0, using theta=1")
        return DerivedConstants(C=0.0, L=L, theta_default=1.0, theta_fallback=True)
    return DerivedConstants(C=C, L=L, theta_default=1.0 / (2.0 * C))


def beta_lower_bound(epsilon: float, lipschitz_f: float, delta: float) -> float:
    """Smallest beta (exclusive) for which an epsilon-stationary penalty point is nearly epsilon-KKT."""
    if delta is None or delta <= 0:
        raise InvalidArgumentError(f"delta must be positive, got {delta}", delta=delta)
    if epsilon < 0:
        raise InvalidArgumentError(f"epsilon must be nonnegative, got {epsilon}", epsilon=epsilon)
    return (epsilon + lipschitz_f) / delta

import logging
from typing import Optional

import numpy as np
from scipy.optimize import lsq_linear, minimize

from .errors import InvalidArgumentError
from .oracles import ConstrainedProblem, as_point, exact_full_eval
from .penalty import HINGE, PenaltyObjective, derived_constants, penalty_weights
from .types import KktCertificate, ProxResult

logger = logging.getLogger('hinge_penalty.certify')

DEFAULT_PROX_ITERS = 10_000
DEFAULT_PROX_TOL = 1e-6
ACTIVATION_TOL = 1e-5
_AVERAGE_CHECK_EVERY = 50


def _strong_convexity(penalty: PenaltyObjective, theta: float) -> float:
    if not theta > 0:
        raise InvalidArgumentError(f"theta must be positive, got {theta}", theta=theta)
    C = derived_constants(penalty).C
    if C > 0 and theta >= 1.0 / C:
        raise InvalidArgumentError(f"theta={theta} must be below 1/C = {1.0 / C:.6g}", theta=theta, C=C)
    return 1.0 / theta - C


def prox_solve(problem: ConstrainedProblem, x, theta: float, beta: float, kind: str = HINGE,
               inner_iters: int = DEFAULT_PROX_ITERS, tol: float = DEFAULT_PROX_TOL, polish: bool = True) -> ProxResult:
    """
    argmin_y Phi(y) + ||y - x||^2 / (2 theta) by averaged subgradient descent.

    The subproblem psi is mu-strongly convex with mu = 1/theta - C, so every visited point y_j
    with subgradient g_j certifies the lower bound psi(y_j) - ||g_j||^2 / (2 mu). Steps are
    2 / (mu (j + 2)) and the running average weights iterate j by j + 1. A Powell polish of the
    best point is kept only when it lowers psi.
    """
    penalty = PenaltyObjective(problem, beta, kind)
    mu = _strong_convexity(penalty, theta)
    x = as_point(x, problem.dimension)

    def psi(y):
        value, grad = penalty.value_and_subgrad(y)
        diff = y - x
        return value + diff @ diff / (2.0 * theta), grad + diff / theta

    y = x.copy()
    average, weight_sum = np.zeros_like(x), 0.0
    best_y, best_value = x.copy(), np.inf
    lower = -np.inf
    iterations = 0
    for j in range(int(inner_iters)):
        iterations = j + 1
        value, grad = psi(y)
        lower = max(lower, value - grad @ grad / (2.0 * mu))
        if value < best_value:
            best_y, best_value = y.copy(), value
        average = (weight_sum * average + (j + 1) * y) / (weight_sum + j + 1)
        weight_sum += j + 1
        if j % _AVERAGE_CHECK_EVERY == _AVERAGE_CHECK_EVERY - 1:
            avg_value = psi(average)[0]
            if avg_value < best_value:
                best_y, best_value = average.copy(), avg_value
        if best_value - lower <= tol:
            break
        y = y - 2.0 / (mu * (j + 2)) * grad

    polished = False
    if polish:
        result = minimize(lambda z: psi(z)[0], best_y, method='Powell',
                          options={'xtol': 1e-12, 'ftol': 1e-15, 'maxiter': 20_000})
        if result.fun < best_value:
            best_y, best_value, polished = np.atleast_1d(result.x).astype(float), float(result.fun), True
    converged = best_value - lower <= tol
    if not converged:
        logger.debug(f"prox_solve on '{problem.name}' reached gap {best_value - lower:.3g} > tol={tol} "
                     f"after {iterations} iterations")
    return ProxResult(x_bar=best_y, value=float(best_value), lower_bound=float(lower), iterations=iterations,
                      converged=converged, polished=polished)


def moreau_grad(problem: ConstrainedProblem, x, theta: float, beta: float, kind: str = HINGE,
                inner_iters: int = DEFAULT_PROX_ITERS, tol: float = DEFAULT_PROX_TOL, polish: bool = True) -> np.ndarray:
    """Gradient (x - prox(x)) / theta of the Moreau envelope of the penalty objective."""
    x = as_point(x, problem.dimension)
    prox = prox_solve(problem, x, theta, beta, kind, inner_iters, tol, polish)
    return (x - prox.x_bar) / theta


def moreau_envelope(problem: ConstrainedProblem, x, theta: float, beta: float, kind: str = HINGE,
                    inner_iters: int = DEFAULT_PROX_ITERS, tol: float = DEFAULT_PROX_TOL,
                    polish: bool = True) -> float:
    x = as_point(x, problem.dimension)
    prox = prox_solve(problem, x, theta, beta, kind, inner_iters, tol, polish)
    diff = prox.x_bar - x
    return PenaltyObjective(problem, beta, kind).value(prox.x_bar) + float(diff @ diff) / (2.0 * theta)


def active_mask(h_values: np.ndarray, activation_tol: float = ACTIVATION_TOL) -> np.ndarray:
    """Indices treated as exactly active: |h_k| <= tol * (1 + max_j |h_j|)."""
    h_values = np.asarray(h_values, dtype=float)
    scale = 1.0 + float(np.max(np.abs(h_values)))
    return np.abs(h_values) <= activation_tol * scale


def extract_multipliers(problem: ConstrainedProblem, x_bar, beta: float, kind: str = HINGE,
                        activation_tol: float = ACTIVATION_TOL) -> np.ndarray:
    """
    lambda_k = (beta/m) xi_k read off the penalty subdifferential at x_bar.

    Violated constraints take the penalty's outer derivative, strictly inactive ones 0. Exactly
    active constraints may take any xi in [0, 1]; those are chosen by bounded least squares to
    minimise ||dF + sum_k lambda_k dh_k||.
    """
    _, h_values, f_grad, jacobian = exact_full_eval(problem, x_bar)
    scale = beta / problem.m
    active = active_mask(h_values, activation_tol)
    xi = np.where(active, 0.0, penalty_weights(h_values, kind))
    if scale > 0 and np.any(active):
        fixed = f_grad + scale * xi @ jacobian
        A = scale * jacobian[active].T
        refined = lsq_linear(A, -fixed, bounds=(0.0, 1.0))
        xi[active] = np.clip(refined.x, 0.0, 1.0)
        logger.debug(f"Refined multipliers on {int(active.sum())} active constraints, residual={refined.cost:.3g}")
    return scale * xi


def kkt_certificate(problem: ConstrainedProblem, x, beta: float, theta: Optional[float] = None, kind: str = HINGE,
                    inner_iters: int = DEFAULT_PROX_ITERS, tol: float = DEFAULT_PROX_TOL,
                    activation_tol: float = ACTIVATION_TOL, polish: bool = True) -> KktCertificate:
    """Nearly epsilon-KKT certificate of x: prox reference point, multipliers and the three residuals at x_bar."""
    problem.require_exact()
    x = as_point(x, problem.dimension)
    if theta is None:
        theta = derived_constants(PenaltyObjective(problem, beta, kind)).theta_default
    prox = prox_solve(problem, x, theta, beta, kind, inner_iters, tol, polish)
    x_bar = prox.x_bar
    multipliers = extract_multipliers(problem, x_bar, beta, kind, activation_tol)
    _, h_values, f_grad, jacobian = exact_full_eval(problem, x_bar)
    inactive = (h_values < 0) & ~active_mask(h_values, activation_tol)
    multipliers[inactive] = 0.0
    displacement = float(np.linalg.norm(x - x_bar))
    certificate = KktCertificate(
        x=x, x_bar=x_bar, multipliers=multipliers,
        stationarity=float(np.linalg.norm(f_grad + multipliers @ jacobian)),
        feasibility=float(np.max(h_values)),
        complementarity=float(np.max(np.abs(multipliers * h_values))),
        displacement=displacement, theta=float(theta), beta=float(beta),
        moreau_grad_norm=displacement / theta, prox_gap=prox.gap, prox_converged=prox.converged,
    )
    logger.debug(f"Certificate for '{problem.name}': {certificate!r}")
    return certificate

import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import lsq_linear

from .errors import InvalidArgumentError
from .oracles import ConstrainedProblem, as_point
from .types import PlEstimate, PointRegularity, RegularityReport, SlackReport

logger = logging.getLogger('hinge_penalty.regularity')

SIGMA_FLOOR = 1e-8


def frvp_min_singular(problem: ConstrainedProblem, x, floor: float = SIGMA_FLOOR, label: str = '') -> PointRegularity:
    """
    Smallest singular value of the Jacobian rows of the violated constraints at x.

    Computed from the eigenvalues of the Gram matrix J_V J_V^T; the implied regularity
    constant is sigma / m.
    """
    point = as_point(x, problem.dimension)
    h_values, jacobian = problem.exact_constraints(point)
    violating = np.flatnonzero(h_values > 0)
    if violating.size == 0:
        return PointRegularity(label=label, x=point, violating=[], sigma_min=None, delta=None)
    rows = jacobian[violating]
    smallest = float(np.linalg.eigvalsh(rows @ rows.T)[0])
    sigma = math.sqrt(max(smallest, 0.0))
    below = sigma < floor
    if below:
        logger.warning(f"{problem.name} at {label or point}: sigma_min={sigma:.3g} below floor {floor:g} "
                       f"with {violating.size} violated constraints")
    return PointRegularity(label=label, x=point, violating=violating.tolist(), sigma_min=sigma,
                           delta=sigma / problem.m, below_floor=below)


def regularity_report(problem: ConstrainedProblem, points: Iterable[Tuple[str, Sequence[float]]],
                      floor: float = SIGMA_FLOOR, pl_grid: Optional[np.ndarray] = None) -> RegularityReport:
    """FRVP singular values at labelled points, plus a PL estimate when m = 1 and a grid is given."""
    report = RegularityReport(points=[frvp_min_singular(problem, x, floor, label) for label, x in points], floor=floor)
    if problem.m == 1 and pl_grid is not None:
        report.pl = pl_regularity_estimate(problem, pl_grid)
    return report


def box_grid(low: float, high: float, step: float, dim: int = 1) -> np.ndarray:
    """Regular grid over [low, high]^dim as an (N, dim) array."""
    if not step > 0 or high < low:
        raise InvalidArgumentError(f"Invalid grid [{low}, {high}] with step {step}")
    axis = np.linspace(low, high, int(round((high - low) / step)) + 1)
    mesh = np.meshgrid(*([axis] * dim), indexing='ij')
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def pl_regularity_estimate(problem: ConstrainedProblem, grid) -> PlEstimate:
    """
    Grid estimates of the PL-type constants of a single constraint.

    c = -min h over the grid, mu = min over violating points of ||dh||^2 / (2 (h - min h)),
    delta = sqrt(2 mu c). A grid without violating points gives a vacuous estimate.
    """
    if problem.m != 1:
        raise InvalidArgumentError(f"pl_regularity_estimate needs a single constraint, got m={problem.m}")
    points = np.asarray(grid, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    constraint = problem.constraints[0]
    values, grads = np.empty(len(points)), np.empty((len(points), problem.dimension))
    for i, point in enumerate(points):
        values[i], grads[i] = constraint.exact(as_point(point, problem.dimension))
    floor_value = float(values.min())
    c = -floor_value
    depth_flag = c <= 0
    if depth_flag:
        logger.warning(f"{problem.name}: constraint has no strictly feasible grid point (c={c:.3g})")
    violating = values > 0
    if not np.any(violating):
        logger.info(f"{problem.name}: no violating grid points, regularity condition holds vacuously")
        return PlEstimate(mu=None, c=c, delta=None, vacuous=True, depth_flag=depth_flag, grid_points=len(points))
    ratios = np.sum(grads[violating] ** 2, axis=1) / (2.0 * (values[violating] - floor_value))
    mu = float(ratios.min())
    delta = math.sqrt(2.0 * mu * c) if not depth_flag else None
    return PlEstimate(mu=mu, c=c, delta=delta, vacuous=False, depth_flag=depth_flag, grid_points=len(points))


def slack_demo(perturbation: float = 1e-3) -> SlackReport:
    """
    min x  s.t.  x + s1^2 = 1,  -x + s2^2 = 1  (slack form of -1 <= x <= 1).

    (x, s1, s2) = (1, 0, sqrt 2) with multipliers (-1, 0) zeroes the Lagrangian gradient,
    yet x = 1 is not a minimiser of the inequality problem: the negative multiplier has no
    nonnegative counterpart and d = -1 is a feasible descent direction.
    """
    point = np.array([1.0, 0.0, math.sqrt(2.0)])
    multipliers = np.array([-1.0, 0.0])

    def residuals(z):
        x, s1, s2 = z
        return np.array([x + s1 * s1 - 1.0, -x + s2 * s2 - 1.0])

    def lagrangian_grad(z, lam):
        _, s1, s2 = z
        objective = np.array([1.0, 0.0, 0.0])
        jacobian = np.array([[1.0, 2.0 * s1, 0.0], [-1.0, 0.0, 2.0 * s2]])
        return objective + lam @ jacobian

    grad = lagrangian_grad(point, multipliers)
    # inequality form h1 = x - 1 (active), h2 = -x - 1 (inactive, multiplier 0)
    x = point[0]
    h = np.array([x - 1.0, -x - 1.0])
    h_grads = np.array([[1.0], [-1.0]])
    active = np.abs(h) <= 1e-12
    fit = lsq_linear(h_grads[active].T, -np.ones(1), bounds=(0.0, np.inf))
    original_residual = float(np.linalg.norm(1.0 + h_grads[active].T @ fit.x))
    direction = -1.0
    step = 1e-6
    moved = x + step * direction
    descent_feasible = bool(moved - 1.0 <= 0 and -moved - 1.0 <= 0)
    perturbed = point.copy()
    perturbed[2] += perturbation
    report = SlackReport(
        point=point, multipliers=multipliers,
        lagrangian_grad_norm=float(np.linalg.norm(grad)),
        equality_residual=float(np.max(np.abs(residuals(point)))),
        slack_stationary=bool(np.linalg.norm(grad) <= 1e-12),
        multipliers_nonnegative=bool(np.all(multipliers >= 0)),
        original_kkt_residual=float(original_residual),
        descent_direction=direction,
        directional_derivative=1.0 * direction,
        descent_feasible=descent_feasible,
        perturbation=float(perturbation),
        perturbed_residual=float(np.max(np.abs(residuals(perturbed)))),
    )
    logger.info(f"Slack demo: Lagrangian gradient norm {report.lagrangian_grad_norm:.1e}, "
                f"multipliers nonnegative={report.multipliers_nonnegative}, not minimal={report.not_minimal}")
    return report

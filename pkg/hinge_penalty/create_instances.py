import hashlib
import json
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, nnls

from .errors import DataError, InstanceGenerationError, InvalidArgumentError, SerializationError
from .oracles import (AbsQuadraticOracle, AffineInnerOracle, ConstrainedProblem, FccoObjective, FunctionOracle,
                      GroupMeanOracle, KnownSolution, NestedAbsHingeConstraint, PairwiseAucOracle, ProblemConstants,
                      QuadraticOracle, softplus_outer, square_outer)
from .streams import StreamRole, generator_for

logger = logging.getLogger('hinge_penalty.create_instances')

SCHEMA_VERSION = 1
MAX_GENERATION_ATTEMPTS = 10
FEASIBILITY_TOL = 1e-6
# max |sigmoid''|
_SIGMOID_CURVATURE = 1.0 / (6.0 * math.sqrt(3.0))


def exemplar_objective(x: np.ndarray):
    return float(x[0]), np.ones(1)


def exemplar_constraint(x: np.ndarray):
    q = x[0] * x[0] - 1.0
    return abs(q) - 1.0, np.array([np.sign(q) * 2.0 * x[0]])


def make_exemplar_1d(noise: float = 0.0) -> ConstrainedProblem:
    """min x  s.t.  |x^2 - 1| - 1 <= 0, whose solution is x* = -sqrt(2) with multiplier 1/(2 sqrt(2))."""
    if noise < 0:
        raise InvalidArgumentError(f"noise must be nonnegative, got {noise}")
    root2 = math.sqrt(2.0)
    objective = FunctionOracle(exemplar_objective, 1, noise_level=noise, lipschitz=1.0, weak_convexity=0.0, name='F')
    constraint = FunctionOracle(exemplar_constraint, 1, noise_level=noise, lipschitz=2.0 * root2,
                                weak_convexity=2.0, name='h')
    constants = ProblemConstants(rho0=0.0, rho1=2.0, lipschitz_f=1.0, lipschitz_h=2.0 * root2, box_radius=root2,
                                 noise_f=noise, noise_h=noise, delta=2.0, subgrad_noise_bound=noise)
    return ConstrainedProblem(
        objective=objective,
        constraints=[constraint],
        constants=constants,
        x0=np.array([2.0]),
        known_solution=KnownSolution(point=np.array([-root2]), multipliers=np.array([1.0 / (2.0 * root2)])),
        spec={'kind': 'exemplar_1d', 'noise': float(noise)},
        name='exemplar_1d',
    )


def _random_pd(rng: np.random.Generator, dim: int, floor: float) -> np.ndarray:
    M = rng.standard_normal((dim, dim))
    return M @ M.T / dim + floor * np.eye(dim)


def _shell_constraints(rng: np.random.Generator, dim: int, m: int, anchor: np.ndarray,
                       noise: float) -> List[AbsQuadraticOracle]:
    """
    m constraints |0.5 (x-a_k)'P_k(x-a_k) - r_k| - c_k <= 0, each an ellipsoidal shell.

    Centres are placed so that q_k(anchor) = 0, making `anchor` strictly feasible with margin c_k.
    """
    constraints = []
    for k in range(m):
        P = _random_pd(rng, dim, 0.5)
        radius = rng.uniform(0.2, 0.8)
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        offset = math.sqrt(2.0 * radius / float(direction @ P @ direction))
        centre = anchor - offset * direction
        c = rng.uniform(0.3, 0.6) * radius
        constraints.append(AbsQuadraticOracle(P, -P @ centre, 0.5 * centre @ P @ centre - radius, c,
                                              noise_level=noise, weak_convexity=float(np.linalg.eigvalsh(P)[-1]),
                                              name=f'h_{k + 1}'))
    return constraints


def _shell_constants(constraints: Sequence[AbsQuadraticOracle], box_radius: float) -> Tuple[float, float]:
    reach = box_radius * math.sqrt(constraints[0].dimension)
    rho1 = max(c.weak_convexity for c in constraints)
    lipschitz_h = max(np.linalg.norm(c.P, 2) * reach + np.linalg.norm(c.p) for c in constraints)
    for c in constraints:
        c.lipschitz = float(np.linalg.norm(c.P, 2) * reach + np.linalg.norm(c.p))
    return float(rho1), float(lipschitz_h)


def _reference_solution(objective, constraints: Sequence[AbsQuadraticOracle],
                        start: np.ndarray) -> Optional[KnownSolution]:
    """SLSQP on the smooth split form c_k - q_k >= 0, c_k + q_k >= 0; None when it fails verification."""
    smooth = []
    for c in constraints:
        smooth.append({'type': 'ineq', 'fun': lambda x, c=c: c.c - c.quadratic(x)[0],
                       'jac': lambda x, c=c: -c.quadratic(x)[1]})
        smooth.append({'type': 'ineq', 'fun': lambda x, c=c: c.c + c.quadratic(x)[0],
                       'jac': lambda x, c=c: c.quadratic(x)[1]})
    result = minimize(lambda x: objective.exact(x)[0], start, jac=lambda x: objective.exact(x)[1],
                      method='SLSQP', constraints=smooth, options={'maxiter': 1000, 'ftol': 1e-14})
    point = result.x
    values = np.array([c.exact(point)[0] for c in constraints])
    if not result.success or values.max() > FEASIBILITY_TOL:
        logger.debug(f"Reference solve rejected: success={result.success}, max violation={values.max():.3e}")
        return None
    grad_f = objective.exact(point)[1]
    active = np.flatnonzero(np.abs(values) <= 1e-5)
    multipliers = np.zeros(len(constraints))
    if active.size:
        jac = np.array([constraints[k].exact(point)[1] for k in active])
        multipliers[active] = nnls(jac.T, -grad_f)[0]
    return KnownSolution(point=point, multipliers=multipliers)


def _empirical_subgrad_noise(oracles, point: np.ndarray, seed: int, samples: int = 256) -> float:
    """Root-mean-square deviation of single-sample subgradients from the exact one, worst oracle."""
    worst = 0.0
    for index, oracle in enumerate(oracles):
        rng = generator_for(seed, StreamRole.GENERATOR, 1000 + index)
        _, grads = oracle.evaluate(point, oracle.draw(rng, samples))
        exact_grad = oracle.exact(point)[1]
        worst = max(worst, float(np.sqrt(np.mean(np.sum((grads - exact_grad) ** 2, axis=1)))))
    return worst


def make_quadratic_instance(dim: int, m: int, seed: int, noise: float = 0.0,
                            box_radius: float = 3.0) -> ConstrainedProblem:
    """
    Convex quadratic objective with m ellipsoidal-shell constraints |q_k(x)| - c_k <= 0.

    The known solution is computed by SLSQP on the smooth split form c_k - q_k >= 0, c_k + q_k >= 0,
    with multipliers fitted by nonnegative least squares on the active constraints. Seeds whose solve
    fails verification or leaves the box are retried with the next generator stream.
    """
    if dim < 1 or m < 1:
        raise InvalidArgumentError(f"dim and m must be positive, got dim={dim}, m={m}")
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = generator_for(seed, StreamRole.GENERATOR, attempt)
        A = _random_pd(rng, dim, 0.5)
        target = rng.uniform(-box_radius / 2, box_radius / 2, dim)
        anchor = rng.uniform(-box_radius / 4, box_radius / 4, dim)
        b = -A @ target
        objective = QuadraticOracle(A, b, 0.0, noise_level=noise, weak_convexity=0.0, name='F')
        constraints = _shell_constraints(rng, dim, m, anchor, noise)
        solution = _reference_solution(objective, constraints, anchor)
        if solution is None or np.max(np.abs(solution.point)) > box_radius:
            logger.info(f"Quadratic instance attempt {attempt} rejected (dim={dim}, m={m}, seed={seed})")
            continue
        reach = box_radius * math.sqrt(dim)
        lipschitz_f = float(np.linalg.norm(A, 2) * reach + np.linalg.norm(b))
        objective.lipschitz = lipschitz_f
        rho1, lipschitz_h = _shell_constants(constraints, box_radius)
        constants = ProblemConstants(
            rho0=0.0, rho1=rho1, lipschitz_f=lipschitz_f, lipschitz_h=lipschitz_h, box_radius=box_radius,
            noise_f=noise, noise_h=noise,
            subgrad_noise_bound=_empirical_subgrad_noise([objective] + constraints, anchor, seed))
        logger.debug(f"Generated quadratic instance dim={dim}, m={m}, seed={seed} on attempt {attempt}")
        return ConstrainedProblem(
            objective=objective, constraints=constraints, constants=constants,
            x0=np.clip(target, -box_radius, box_radius), known_solution=solution,
            spec={'kind': 'quadratic', 'dim': int(dim), 'm': int(m), 'seed': int(seed), 'noise': float(noise),
                  'box_radius': float(box_radius)},
            name=f'quadratic_d{dim}_m{m}_s{seed}',
            extras={'strictly_feasible_point': anchor},
        )
    raise InstanceGenerationError(
        f"No feasible quadratic instance after {MAX_GENERATION_ATTEMPTS} attempts", dim=dim, m=m, seed=seed)


def make_fcco_instance(n: int, dim: int, condition: str, seed: int, m: int = 1, noise: float = 0.1,
                       box_radius: float = 3.0) -> ConstrainedProblem:
    """
    Setting-II instance F(x) = (1/n) sum_i f_i(E[g_i(x)]).

    monotone: f_i = softplus, g_i affine plus noise.
    smooth:   f_i(u) = u^2, g_i quadratic plus noise.
    """
    if n < 2:
        raise InvalidArgumentError(f"FCCO instances need n >= 2, got {n}")
    if condition not in ('monotone', 'smooth'):
        raise InvalidArgumentError(f"condition must be 'monotone' or 'smooth', got {condition!r}")
    reach = box_radius * math.sqrt(dim)
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = generator_for(seed, StreamRole.GENERATOR, attempt)
        anchor = rng.uniform(-box_radius / 4, box_radius / 4, dim)
        if condition == 'monotone':
            inner = [AffineInnerOracle(rng.standard_normal(dim) / math.sqrt(dim), rng.normal(0.0, 0.5),
                                       noise_level=noise, weak_convexity=0.0, name=f'g_{i + 1}')
                     for i in range(n)]
            lipschitz_g = max(float(np.linalg.norm(g.slope)) for g in inner)
            outer = [softplus_outer() for _ in range(n)]
            fcco_constants = {'lipschitz_g': lipschitz_g, 'noise_g': noise, 'weak_convexity_g': 0.0}
            rho0 = 0.0
            lipschitz_f = lipschitz_g
        else:
            inner = []
            for i in range(n):
                Q = _random_pd(rng, dim, 0.1) / (2.0 * dim)
                inner.append(QuadraticOracle(Q, rng.standard_normal(dim) / math.sqrt(dim), rng.normal(0.0, 0.5),
                                             noise_level=noise, name=f'g_{i + 1}'))
            lipschitz_g = max(float(np.linalg.norm(g.P, 2) * reach + np.linalg.norm(g.p)) for g in inner)
            grad_lipschitz_g = max(float(np.linalg.norm(g.P, 2)) for g in inner)
            g_max = max(0.5 * float(np.linalg.norm(g.P, 2)) * reach ** 2 + float(np.linalg.norm(g.p)) * reach
                        + abs(g.s) for g in inner)
            outer = [square_outer(lipschitz=2.0 * g_max) for _ in range(n)]
            fcco_constants = {'lipschitz_g': lipschitz_g, 'noise_g': noise, 'grad_lipschitz_g': grad_lipschitz_g}
            lipschitz_f = 2.0 * g_max * lipschitz_g
            rho0 = 2.0 * lipschitz_g ** 2 + 2.0 * g_max * grad_lipschitz_g
        objective = FccoObjective(outer, inner, constants=fcco_constants, condition=condition)
        constraints = _shell_constraints(rng, dim, m, anchor, noise)
        solution = _reference_solution(objective, constraints, anchor)
        if solution is None or np.max(np.abs(solution.point)) > box_radius:
            logger.info(f"FCCO instance attempt {attempt} rejected (n={n}, dim={dim}, seed={seed})")
            continue
        rho1, lipschitz_h = _shell_constants(constraints, box_radius)
        constants = ProblemConstants(
            rho0=rho0, rho1=rho1, lipschitz_f=lipschitz_f, lipschitz_h=lipschitz_h, box_radius=box_radius,
            noise_h=noise, noise_g=noise, lipschitz_g=lipschitz_g,
            weak_convexity_g=fcco_constants.get('weak_convexity_g'),
            grad_lipschitz_g=fcco_constants.get('grad_lipschitz_g'),
            subgrad_noise_bound=_empirical_subgrad_noise(inner + constraints, anchor, seed))
        return ConstrainedProblem(
            objective=objective, constraints=constraints, constants=constants,
            x0=np.zeros(dim), known_solution=solution,
            spec={'kind': 'fcco', 'n': int(n), 'dim': int(dim), 'condition': condition, 'seed': int(seed),
                  'm': int(m), 'noise': float(noise), 'box_radius': float(box_radius)},
            name=f'fcco_{condition}_n{n}_d{dim}_s{seed}',
            extras={'strictly_feasible_point': anchor},
        )
    raise InstanceGenerationError(
        f"No feasible FCCO instance after {MAX_GENERATION_ATTEMPTS} attempts", n=n, dim=dim, seed=seed)


def fairness_problem_from_data(features_p, labels_p, features_u, labels_u, thresholds: Sequence[float],
                               kappa: float, box_radius: float = 5.0, spec: Optional[Dict[str, Any]] = None,
                               name: str = 'fairness') -> ConstrainedProblem:
    """
    AUC maximisation with ROC fairness constraints between groups p and u.

    For every threshold tau there is a TPR constraint (positives) and an FPR
    constraint (negatives): |mean_p sigmoid(a'w - tau) - mean_u sigmoid(a'w - tau)| - kappa <= 0.
    """
    if not thresholds:
        raise InvalidArgumentError("thresholds must be nonempty")
    features_p, features_u = np.atleast_2d(features_p).astype(float), np.atleast_2d(features_u).astype(float)
    labels_p, labels_u = np.asarray(labels_p), np.asarray(labels_u)
    for group, labels in (('p', labels_p), ('u', labels_u)):
        if not (np.any(labels == 1) and np.any(labels == -1)):
            raise DataError(f"Group '{group}' lacks both labels", group=group)
    positives = np.vstack([features_p[labels_p == 1], features_u[labels_u == 1]])
    negatives = np.vstack([features_p[labels_p == -1], features_u[labels_u == -1]])
    objective = PairwiseAucOracle(positives, negatives, name='neg_auc')
    constraints = []
    for tau in thresholds:
        tau = float(tau)
        constraints.append(NestedAbsHingeConstraint(
            GroupMeanOracle(features_p[labels_p == 1], tau), GroupMeanOracle(features_u[labels_u == 1], tau),
            kappa, name=f'tpr_th_{tau}'))
        constraints.append(NestedAbsHingeConstraint(
            GroupMeanOracle(features_p[labels_p == -1], tau), GroupMeanOracle(features_u[labels_u == -1], tau),
            kappa, name=f'fpr_th_{tau}'))
    scale = float(np.max(np.linalg.norm(np.vstack([features_p, features_u]), axis=1)))
    constants = ProblemConstants(
        rho0=_SIGMOID_CURVATURE * (2.0 * scale) ** 2,
        rho1=2.0 * _SIGMOID_CURVATURE * scale ** 2,
        lipschitz_f=0.5 * scale,
        lipschitz_h=0.5 * scale,
        box_radius=box_radius,
        noise_f=0.5,
        noise_h=0.5,
    )
    return ConstrainedProblem(
        objective=objective, constraints=constraints, constants=constants, x0=np.zeros(features_p.shape[1]),
        spec=spec, name=name,
        extras={'features_p': features_p, 'labels_p': labels_p, 'features_u': features_u, 'labels_u': labels_u},
    )


def make_fairness_instance(n_per_group: int, thresholds: Sequence[float], kappa: float, seed: int,
                           dim: int = 2, group_shift: float = 1.0,
                           identical_groups: bool = False) -> ConstrainedProblem:
    """
    Two-group synthetic ROC-fairness instance.

    Group u is group p's sample with every feature vector shifted by `group_shift`
    along the first axis, so scorers ignoring that axis are exactly fair. Labels
    depend on both axes, mostly on the second one.
    """
    if n_per_group < 10:
        raise InvalidArgumentError(f"n_per_group must be at least 10, got {n_per_group}")
    if dim < 2:
        raise InvalidArgumentError(f"fairness instances need dim >= 2, got {dim}")
    rng = generator_for(seed, StreamRole.GENERATOR, 0)
    labels_p = np.where(rng.random(n_per_group) < 0.5, 1, -1)
    labels_p[:2] = (1, -1)
    means = np.zeros(dim)
    means[:2] = (0.5, 1.5)
    features_p = labels_p[:, None] * means[None, :] + rng.standard_normal((n_per_group, dim))
    features_u = features_p.copy()
    labels_u = labels_p.copy()
    if not identical_groups:
        features_u[:, 0] += group_shift
    spec = {'kind': 'fairness', 'n_per_group': int(n_per_group), 'thresholds': [float(t) for t in thresholds],
            'kappa': float(kappa), 'seed': int(seed), 'dim': int(dim), 'group_shift': float(group_shift),
            'identical_groups': bool(identical_groups)}
    return fairness_problem_from_data(features_p, labels_p, features_u, labels_u, thresholds, kappa, spec=spec,
                                      name=f'fairness_n{n_per_group}_s{seed}')


def fit_unconstrained(problem: ConstrainedProblem, start=None) -> np.ndarray:
    """Minimise the exact objective alone over the instance box."""
    problem.require_exact()
    radius = problem.constants.box_radius
    x_start = problem.x0 if start is None else np.asarray(start, dtype=float)
    result = minimize(lambda x: problem.exact_objective(x)[0], x_start, jac=lambda x: problem.exact_objective(x)[1],
                      method='L-BFGS-B', bounds=[(-radius, radius)] * problem.dimension)
    logger.debug(f"Unconstrained fit for {problem.name}: F={result.fun:.6f}, success={result.success}")
    return result.x


_BUILDERS = {
    'exemplar_1d': lambda p: make_exemplar_1d(noise=p.get('noise', 0.0)),
    'quadratic': lambda p: make_quadratic_instance(p['dim'], p['m'], p['seed'], noise=p.get('noise', 0.0),
                                                   box_radius=p.get('box_radius', 3.0)),
    'fcco': lambda p: make_fcco_instance(p['n'], p['dim'], p['condition'], p['seed'], m=p.get('m', 1),
                                         noise=p.get('noise', 0.1), box_radius=p.get('box_radius', 3.0)),
    'fairness': lambda p: make_fairness_instance(p['n_per_group'], p['thresholds'], p['kappa'], p['seed'],
                                                 dim=p.get('dim', 2), group_shift=p.get('group_shift', 1.0),
                                                 identical_groups=p.get('identical_groups', False)),
}


def build_instance(spec: Dict[str, Any]) -> ConstrainedProblem:
    """Build a catalog instance from an inline spec such as {"kind": "exemplar_1d", "noise": 0.05}."""
    kind = spec.get('kind')
    if kind not in _BUILDERS:
        raise SerializationError(f"Unknown instance kind {kind!r}", kind=kind)
    params = {k: v for k, v in spec.items() if k != 'kind'}
    try:
        return _BUILDERS[kind](params)
    except KeyError as e:
        raise SerializationError(f"Instance spec for '{kind}' is missing parameter {e}", kind=kind) from e


def instance_to_json(problem: ConstrainedProblem) -> Dict[str, Any]:
    if problem.spec is None:
        raise SerializationError(f"Problem '{problem.name}' was not built from the catalog and cannot be serialized")
    params = {k: v for k, v in problem.spec.items() if k != 'kind'}
    return {
        'schema_version': SCHEMA_VERSION,
        'kind': problem.spec['kind'],
        'dimension': problem.dimension,
        'seed': params.get('seed'),
        'thresholds': params.get('thresholds'),
        'params': params,
        'constants': problem.constants.to_dict(),
    }


def instance_from_json(document: Dict[str, Any]) -> ConstrainedProblem:
    if document.get('schema_version') != SCHEMA_VERSION:
        raise SerializationError(f"Unsupported instance schema_version {document.get('schema_version')!r}")
    problem = build_instance({'kind': document['kind'], **document['params']})
    if problem.dimension != document['dimension']:
        raise SerializationError("Instance document dimension does not match the rebuilt instance")
    return problem


def instance_hash(problem: ConstrainedProblem) -> str:
    canonical = json.dumps(instance_to_json(problem), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def save_instance(problem: ConstrainedProblem, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(instance_to_json(problem), f, indent=2, sort_keys=True)
    logger.info(f"Saved instance {problem.name} to {path}")


def load_instance(path: str) -> ConstrainedProblem:
    with open(path, 'r', encoding='utf-8') as f:
        document = json.load(f)
    logger.debug(f"Loading instance document from {path}")
    return instance_from_json(document)

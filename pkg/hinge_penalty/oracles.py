import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatchError, InvalidArgumentError, MissingExactEvaluatorError
from .streams import StreamKey

logger = logging.getLogger('hinge_penalty.oracles')

ValueGrad = Tuple[float, np.ndarray]


def as_point(x, dimension: int) -> np.ndarray:
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.ndim != 1 or point.shape[0] != dimension:
        raise DimensionMismatchError(
            f"Point has shape {point.shape}, expected ({dimension},)", expected=dimension, shape=point.shape)
    return point


def check_batch_size(batch_size) -> int:
    if int(batch_size) != batch_size or batch_size < 1:
        raise InvalidArgumentError(f"batch_size must be a positive integer, got {batch_size!r}", batch_size=batch_size)
    return int(batch_size)


@dataclass(frozen=True)
class Batch:
    key: StreamKey
    samples: np.ndarray


@dataclass(frozen=True)
class BatchValue:
    """Mini-batch mean of values and subgradients at one point."""
    key: StreamKey
    value: float
    grad: np.ndarray


class StochasticOracle:
    """
    Stochastic zeroth/first-order oracle h(x; xi).

    Subclasses implement `draw` (sample identifiers from a generator), `evaluate`
    (per-sample values and subgradients, a pure function of point and samples) and,
    when a noise-free ground truth exists, `exact`.
    """
    has_exact = True

    def __init__(self, dimension: int, noise_level: float = 0.0, lipschitz: Optional[float] = None,
                 weak_convexity: Optional[float] = None, name: str = ''):
        if dimension < 1:
            raise InvalidArgumentError(f"Oracle dimension must be positive, got {dimension}")
        if noise_level < 0:
            raise InvalidArgumentError(f"Noise level must be nonnegative, got {noise_level}")
        self.dimension = int(dimension)
        self.noise_level = float(noise_level)
        self.lipschitz = lipschitz
        self.weak_convexity = weak_convexity
        self.name = name

    def draw(self, generator: np.random.Generator, batch_size: int) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x: np.ndarray, samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def exact(self, x: np.ndarray) -> ValueGrad:
        raise MissingExactEvaluatorError(f"Oracle '{self.name}' has no exact evaluator", oracle=self.name)

    def sample_batch(self, key: StreamKey, batch_size: int) -> Batch:
        return Batch(key=key, samples=self.draw(key.generator(), check_batch_size(batch_size)))

    def batch_value(self, x: np.ndarray, batch: Batch) -> BatchValue:
        values, grads = self.evaluate(x, batch.samples)
        return BatchValue(key=batch.key, value=float(np.mean(values)), grad=np.mean(grads, axis=0))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name='{self.name}', dimension={self.dimension}, noise_level={self.noise_level})"


class GaussianNoiseOracle(StochasticOracle):
    """Exact function plus additive Gaussian noise on the value and on each subgradient coordinate."""

    def value_and_grad(self, x: np.ndarray) -> ValueGrad:
        raise NotImplementedError

    def draw(self, generator: np.random.Generator, batch_size: int) -> np.ndarray:
        return generator.standard_normal((batch_size, 1 + self.dimension))

    def evaluate(self, x: np.ndarray, samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        value, grad = self.value_and_grad(x)
        values = value + self.noise_level * samples[:, 0]
        grads = grad[None, :] + self.noise_level * samples[:, 1:]
        return values, grads

    def exact(self, x: np.ndarray) -> ValueGrad:
        return self.value_and_grad(x)


class FunctionOracle(GaussianNoiseOracle):
    def __init__(self, fn: Callable[[np.ndarray], ValueGrad], dimension: int, noise_level: float = 0.0,
                 exact_available: bool = True, **kwargs):
        super().__init__(dimension, noise_level, **kwargs)
        self.fn = fn
        self.has_exact = exact_available

    def value_and_grad(self, x: np.ndarray) -> ValueGrad:
        value, grad = self.fn(x)
        return float(value), np.atleast_1d(np.asarray(grad, dtype=float))

    def exact(self, x: np.ndarray) -> ValueGrad:
        if not self.has_exact:
            return super(GaussianNoiseOracle, self).exact(x)
        return self.value_and_grad(x)


class QuadraticOracle(GaussianNoiseOracle):
    """q(x) = 0.5 x'Px + p'x + s."""

    def __init__(self, P, p, s: float, noise_level: float = 0.0, **kwargs):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        super().__init__(P.shape[0], noise_level, **kwargs)
        self.P = P
        self.p = np.atleast_1d(np.asarray(p, dtype=float))
        self.s = float(s)

    def quadratic(self, x: np.ndarray) -> ValueGrad:
        Px = self.P @ x
        return float(0.5 * x @ Px + self.p @ x + self.s), Px + self.p

    def value_and_grad(self, x: np.ndarray) -> ValueGrad:
        return self.quadratic(x)


class AbsQuadraticOracle(QuadraticOracle):
    """h(x) = |q(x)| - c; the subgradient of |.| at 0 is taken as 0."""

    def __init__(self, P, p, s: float, c: float, noise_level: float = 0.0, **kwargs):
        super().__init__(P, p, s, noise_level, **kwargs)
        self.c = float(c)

    def value_and_grad(self, x: np.ndarray) -> ValueGrad:
        q, dq = self.quadratic(x)
        return abs(q) - self.c, np.sign(q) * dq


class AffineInnerOracle(GaussianNoiseOracle):
    def __init__(self, slope, intercept: float = 0.0, noise_level: float = 0.0, **kwargs):
        slope = np.atleast_1d(np.asarray(slope, dtype=float))
        super().__init__(slope.shape[0], noise_level, **kwargs)
        self.slope = slope
        self.intercept = float(intercept)

    def value_and_grad(self, x: np.ndarray) -> ValueGrad:
        return float(self.slope @ x + self.intercept), self.slope.copy()


class GroupMeanOracle(StochasticOracle):
    """Mean of sigmoid(a'w - tau) over a group's examples, subsampled with replacement."""

    def __init__(self, features, threshold: float, **kwargs):
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if features.shape[0] == 0:
            raise InvalidArgumentError("GroupMeanOracle needs at least one example")
        # sigmoid values lie in [0, 1]
        kwargs.setdefault('noise_level', 0.5)
        super().__init__(features.shape[1], **kwargs)
        self.features = features
        self.threshold = float(threshold)

    def draw(self, generator: np.random.Generator, batch_size: int) -> np.ndarray:
        return generator.integers(0, self.features.shape[0], size=batch_size)

    def _values_grads(self, w: np.ndarray, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        z = rows @ w - self.threshold
        s = expit(z)
        return s, (s * (1.0 - s))[:, None] * rows

    def evaluate(self, x: np.ndarray, samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self._values_grads(x, self.features[samples])

    def exact(self, x: np.ndarray) -> ValueGrad:
        values, grads = self._values_grads(x, self.features)
        return float(values.mean()), grads.mean(axis=0)


class PairwiseAucOracle(StochasticOracle):
    """Negated sigmoid AUC surrogate -mean_{i in pos, j in neg} sigmoid(w'(a_i - a_j)), sampled by pairs."""

    def __init__(self, positives, negatives, **kwargs):
        positives = np.atleast_2d(np.asarray(positives, dtype=float))
        negatives = np.atleast_2d(np.asarray(negatives, dtype=float))
        if positives.shape[0] == 0 or negatives.shape[0] == 0:
            raise InvalidArgumentError("PairwiseAucOracle needs positive and negative examples")
        kwargs.setdefault('noise_level', 0.5)
        super().__init__(positives.shape[1], **kwargs)
        self.positives = positives
        self.negatives = negatives

    def draw(self, generator: np.random.Generator, batch_size: int) -> np.ndarray:
        i = generator.integers(0, self.positives.shape[0], size=batch_size)
        j = generator.integers(0, self.negatives.shape[0], size=batch_size)
        return np.stack([i, j], axis=1)

    def evaluate(self, x: np.ndarray, samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        diffs = self.positives[samples[:, 0]] - self.negatives[samples[:, 1]]
        s = expit(diffs @ x)
        return -s, -(s * (1.0 - s))[:, None] * diffs

    def exact(self, x: np.ndarray) -> ValueGrad:
        sp = self.positives @ x
        sn = self.negatives @ x
        s = expit(sp[:, None] - sn[None, :])
        w = s * (1.0 - s)
        n_pairs = s.size
        grad = (self.positives.T @ w.sum(axis=1) - self.negatives.T @ w.sum(axis=0)) / n_pairs
        return -float(s.mean()), -grad


class NestedAbsHingeConstraint:
    """
    h(x) = |E[first] - E[second]| - kappa.

    The absolute value sits outside the expectations, so the solver tracks the two
    inner means separately and applies the chain rule on the tracked values.
    """
    has_exact = True

    def __init__(self, first: StochasticOracle, second: StochasticOracle, kappa: float, name: str = ''):
        if kappa <= 0:
            raise InvalidArgumentError(f"Tolerance kappa must be positive, got {kappa}")
        if first.dimension != second.dimension:
            raise DimensionMismatchError("Nested constraint inner oracles disagree on dimension")
        self.first = first
        self.second = second
        self.kappa = float(kappa)
        self.name = name
        self.dimension = first.dimension
        self.noise_level = max(first.noise_level, second.noise_level)
        self.has_exact = first.has_exact and second.has_exact

    @property
    def components(self) -> Tuple[StochasticOracle, StochasticOracle]:
        return self.first, self.second

    def exact_inner(self, x: np.ndarray) -> Tuple[float, float]:
        return self.first.exact(x)[0], self.second.exact(x)[0]

    def exact(self, x: np.ndarray) -> ValueGrad:
        m1, g1 = self.first.exact(x)
        m2, g2 = self.second.exact(x)
        gap = m1 - m2
        return abs(gap) - self.kappa, np.sign(gap) * (g1 - g2)

    def __repr__(self) -> str:
        return f"NestedAbsHingeConstraint(name='{self.name}', kappa={self.kappa})"


Constraint = Union[StochasticOracle, NestedAbsHingeConstraint]


def constraint_components(constraint: Constraint) -> Tuple[StochasticOracle, ...]:
    if isinstance(constraint, NestedAbsHingeConstraint):
        return constraint.components
    return (constraint,)


def _softplus(u):
    return np.logaddexp(0.0, u)


def _square(u):
    return u * u


def _twice(u):
    return 2.0 * u


def _identity(u):
    return u


def _one(u):
    return np.ones_like(u)


@dataclass(frozen=True)
class OuterFunction:
    """Deterministic scalar outer function f_i of an FCCO objective."""
    name: str
    value: Callable
    derivative: Callable
    monotone_nondecreasing: bool
    smooth: bool
    lipschitz: Optional[float] = None
    weak_convexity: Optional[float] = None
    grad_lipschitz: Optional[float] = None


def softplus_outer() -> OuterFunction:
    return OuterFunction('softplus', _softplus, expit, monotone_nondecreasing=True, smooth=True,
                         lipschitz=1.0, weak_convexity=0.0, grad_lipschitz=0.25)


def square_outer(lipschitz: Optional[float] = None) -> OuterFunction:
    return OuterFunction('square', _square, _twice, monotone_nondecreasing=False, smooth=True,
                         lipschitz=lipschitz, weak_convexity=None, grad_lipschitz=2.0)


def identity_outer() -> OuterFunction:
    return OuterFunction('identity', _identity, _one, monotone_nondecreasing=True, smooth=True,
                         lipschitz=1.0, weak_convexity=0.0, grad_lipschitz=0.0)


class FccoObjective:
    """F(x) = (1/n) sum_i f_i(E[g_i(x; zeta)])."""

    def __init__(self, outer: Sequence[OuterFunction], inner: Sequence[StochasticOracle],
                 constants: Optional[Dict[str, float]] = None, condition: Optional[str] = None):
        if len(outer) != len(inner) or len(inner) < 1:
            raise InvalidArgumentError(
                f"FCCO objective needs matching outer/inner lists, got {len(outer)} and {len(inner)}")
        dims = {g.dimension for g in inner}
        if len(dims) != 1:
            raise DimensionMismatchError(f"Inner oracles disagree on dimension: {sorted(dims)}")
        self.outer = list(outer)
        self.inner = list(inner)
        self.constants = dict(constants or {})
        self.condition = self._resolve_condition(condition)
        self.dimension = dims.pop()
        self.noise_level = max(g.noise_level for g in inner)
        self.has_exact = all(g.has_exact for g in inner)

    def _resolve_condition(self, requested: Optional[str]) -> str:
        monotone = all(f.monotone_nondecreasing and f.weak_convexity is not None for f in self.outer)
        smooth = all(f.smooth for f in self.outer)
        if requested == 'monotone' and monotone or requested == 'smooth' and smooth:
            return requested
        if requested is None:
            if monotone:
                return 'monotone'
            if smooth:
                return 'smooth'
        raise InvalidArgumentError(
            "Outer functions must all be monotone and weakly convex (condition i) or all smooth (condition ii)",
            requested=requested, tags=[(f.name, f.monotone_nondecreasing, f.smooth) for f in self.outer])

    @property
    def n(self) -> int:
        return len(self.inner)

    def exact_inner(self, x: np.ndarray) -> np.ndarray:
        return np.array([g.exact(x)[0] for g in self.inner])

    def exact(self, x: np.ndarray) -> ValueGrad:
        total = 0.0
        grad = np.zeros(self.dimension)
        for f, g in zip(self.outer, self.inner):
            value, dg = g.exact(x)
            total += float(f.value(value))
            grad += float(f.derivative(value)) * dg
        return total / self.n, grad / self.n

    def __repr__(self) -> str:
        return f"FccoObjective(n={self.n}, dimension={self.dimension}, condition='{self.condition}')"


Objective = Union[StochasticOracle, FccoObjective]


@dataclass
class ProblemConstants:
    rho0: float
    rho1: float
    lipschitz_f: float
    lipschitz_h: float
    box_radius: float
    noise_f: float = 0.0
    noise_h: float = 0.0
    noise_g: float = 0.0
    lipschitz_g: Optional[float] = None
    weak_convexity_g: Optional[float] = None
    grad_lipschitz_g: Optional[float] = None
    delta: Optional[float] = None
    subgrad_noise_bound: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProblemConstants':
        return cls(**data)


@dataclass
class KnownSolution:
    point: np.ndarray
    multipliers: np.ndarray


@dataclass
class ConstrainedProblem:
    objective: Objective
    constraints: List[Constraint]
    constants: ProblemConstants
    x0: np.ndarray
    known_solution: Optional[KnownSolution] = None
    spec: Optional[Dict[str, Any]] = None
    name: str = 'custom'
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.constraints) < 1:
            raise InvalidArgumentError("A constrained problem needs at least one constraint")
        dims = {self.objective.dimension} | {c.dimension for c in self.constraints}
        if len(dims) != 1:
            raise DimensionMismatchError(f"Objective and constraints disagree on dimension: {sorted(dims)}")
        self.x0 = as_point(self.x0, self.dimension)

    @property
    def dimension(self) -> int:
        return self.objective.dimension

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def setting(self) -> str:
        return 'II' if isinstance(self.objective, FccoObjective) else 'I'

    @property
    def has_exact(self) -> bool:
        return self.objective.has_exact and all(c.has_exact for c in self.constraints)

    def require_exact(self):
        if not self.has_exact:
            raise MissingExactEvaluatorError(f"Problem '{self.name}' lacks exact evaluators", problem=self.name)

    def exact_objective(self, x) -> ValueGrad:
        self.require_exact()
        return self.objective.exact(as_point(x, self.dimension))

    def exact_constraints(self, x) -> Tuple[np.ndarray, np.ndarray]:
        self.require_exact()
        point = as_point(x, self.dimension)
        values = np.empty(self.m)
        jacobian = np.empty((self.m, self.dimension))
        for k, constraint in enumerate(self.constraints):
            values[k], jacobian[k] = constraint.exact(point)
        return values, jacobian

    def exact_component_values(self, x) -> np.ndarray:
        """Exact values of every tracked constraint component, in tracker order."""
        point = as_point(x, self.dimension)
        return np.array([oracle.exact(point)[0] for c in self.constraints for oracle in constraint_components(c)])

    def __repr__(self) -> str:
        return f"ConstrainedProblem(name='{self.name}', dimension={self.dimension}, m={self.m}, setting='{self.setting}')"


def eval_oracle(oracle: StochasticOracle, x, batch_size: int, key: StreamKey) -> ValueGrad:
    """Mini-batch mean value and subgradient of `oracle` at `x` on the batch drawn from `key`."""
    if not isinstance(oracle, StochasticOracle):
        raise InvalidArgumentError(f"eval_oracle expects a StochasticOracle, got {type(oracle).__name__}")
    point = as_point(x, oracle.dimension)
    batch = oracle.sample_batch(key, batch_size)
    result = oracle.batch_value(point, batch)
    return result.value, result.grad


def exact_full_eval(problem: ConstrainedProblem, x) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Noise-free (F, h, dF, J) with the deterministic tie-break subgradients."""
    f_value, f_grad = problem.exact_objective(x)
    h_values, jacobian = problem.exact_constraints(x)
    return f_value, h_values, f_grad, jacobian

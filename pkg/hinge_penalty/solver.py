import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certify import moreau_grad
from .errors import InvalidArgumentError, MonotonicityError, ScheduleError
from .estimator import ESTIMATORS, MSVR, MsvrState, msvr_init, msvr_update, tracking_error
from .oracles import (ConstrainedProblem, FccoObjective, NestedAbsHingeConstraint, as_point, constraint_components,
                      eval_oracle, exact_full_eval)
from .penalty import HINGE, PENALTY_KINDS, PenaltyObjective, beta_lower_bound, derived_constants, penalty_weights
from .schedules import BatchSizes, ScheduleMultipliers, schedule_from_theorem, setting_for
from .streams import StreamFamily, StreamKey, StreamRole
from .types import RunResult, TrajectoryRecord

logger = logging.getLogger('hinge_penalty.solver')

PRE_UPDATE = 'pre_update'
POST_UPDATE = 'post_update'
TRACKER_ORDERS = (PRE_UPDATE, POST_UPDATE)
OUTPUT_RULES = ('uniform_random', 'best_diagnostic', 'final')
DIVERGENCE_FACTOR = 10.0

_CONSTRAINT_BLOCK_STREAM = 0
_OUTER_BLOCK_STREAM = 1
_INIT_CONSTRAINT_DRAW = 0
_INIT_INNER_DRAW = 1


@dataclass
class SolverConfig:
    beta: float
    eta: float
    T: int
    seed: int = 0
    gamma1: float = 0.5
    gamma2: float = 0.5
    gamma1_prime: Optional[float] = None
    gamma2_prime: Optional[float] = None
    batch_outer: Optional[int] = None
    batch_constraints: Optional[int] = None
    batch_inner: int = 1
    batch_constraint_samples: int = 1
    kind: str = HINGE
    estimator: str = MSVR
    tracker_order: str = PRE_UPDATE
    output_rule: str = 'uniform_random'
    stride: Optional[int] = None
    x0: Optional[List[float]] = None
    eta_decay_milestones: Tuple[float, ...] = ()
    eta_decay_factor: float = 10.0
    schedule_multipliers: Dict[str, float] = field(default_factory=dict)
    schedule_epsilon: Optional[float] = None
    allow_large_gamma: bool = False
    epsilon: float = 0.1
    delta: Optional[float] = None
    theta: Optional[float] = None
    diagnostic_prox_iters: int = 300
    audit_streams: bool = False
    name: str = 'run'

    def resolved_batches(self, problem: ConstrainedProblem) -> BatchSizes:
        if problem.setting == 'II':
            outer = problem.objective.n if self.batch_outer is None else self.batch_outer
        else:
            outer = 1 if self.batch_outer is None else self.batch_outer
        constraints = problem.m if self.batch_constraints is None else self.batch_constraints
        return BatchSizes(outer=int(outer), constraints=int(constraints), inner=int(self.batch_inner),
                          constraint_samples=int(self.batch_constraint_samples))

    def resolved_stride(self) -> int:
        return int(self.stride) if self.stride else max(1, int(self.T) // 1000)

    def eta_at(self, t: int) -> float:
        drops = sum(1 for fraction in self.eta_decay_milestones if t >= fraction * self.T)
        return self.eta / self.eta_decay_factor ** drops

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['eta_decay_milestones'] = list(self.eta_decay_milestones)
        return data


def validate_config(problem: ConstrainedProblem, config: SolverConfig) -> BatchSizes:
    """Check a config against a problem; returns the resolved batch sizes."""
    if config.kind not in PENALTY_KINDS:
        raise InvalidArgumentError(f"Unknown penalty kind {config.kind!r}")
    if config.estimator not in ESTIMATORS:
        raise InvalidArgumentError(f"Unknown estimator {config.estimator!r}")
    if config.tracker_order not in TRACKER_ORDERS:
        raise InvalidArgumentError(f"Unknown tracker_order {config.tracker_order!r}")
    if config.output_rule not in OUTPUT_RULES:
        raise InvalidArgumentError(f"Unknown output_rule {config.output_rule!r}")
    if not np.isfinite(config.beta) or config.beta < 0:
        raise InvalidArgumentError(f"beta must be nonnegative, got {config.beta}")
    if not config.eta > 0:
        raise InvalidArgumentError(f"eta must be positive, got {config.eta}")
    if int(config.T) != config.T or config.T < 0:
        raise InvalidArgumentError(f"T must be a nonnegative integer, got {config.T}")
    if any(not 0 < f < 1 for f in config.eta_decay_milestones) or not config.eta_decay_factor > 0:
        raise InvalidArgumentError("eta_decay_milestones must lie in (0, 1) and eta_decay_factor must be positive")
    batches = config.resolved_batches(problem)
    for name, size in asdict(batches).items():
        if size < 1:
            raise InvalidArgumentError(f"Batch size '{name}' must be positive, got {size}")
    if batches.constraints > problem.m:
        raise InvalidArgumentError(f"|B_c|={batches.constraints} exceeds m={problem.m}")
    if problem.setting == 'II' and batches.outer > problem.objective.n:
        raise InvalidArgumentError(f"|B|={batches.outer} exceeds n={problem.objective.n}")
    if config.schedule_epsilon is not None:
        expected = config_from_schedule(problem, config, config.schedule_epsilon)
        if (expected.eta, expected.T, expected.gamma2) != (config.eta, config.T, config.gamma2):
            raise ScheduleError("Schedule-derived parameters do not match the schedule for the declared epsilon",
                                epsilon=config.schedule_epsilon)
    return batches


def config_from_schedule(problem: ConstrainedProblem, config: SolverConfig, epsilon: float) -> SolverConfig:
    """Copy of `config` whose (gamma1, gamma2, eta, T) come from the convergence-theorem schedule."""
    n = problem.objective.n if problem.setting == 'II' else 1
    schedule = schedule_from_theorem(setting_for(problem), epsilon, config.beta, config.resolved_batches(problem),
                                     problem.m, n, ScheduleMultipliers.from_dict(config.schedule_multipliers))
    return replace(config, gamma1=schedule.gamma1 if schedule.gamma1 is not None else config.gamma1,
                   gamma2=schedule.gamma2, eta=schedule.eta, T=schedule.T, schedule_epsilon=float(epsilon))


@dataclass
class ConstraintBatches:
    """Constraint mini-batches of one iteration, each evaluated at x_t and at the tracker's previous point."""
    blocks: np.ndarray
    touched: np.ndarray
    values_at_xt: np.ndarray
    values_at_xprev: np.ndarray
    grads_at_xt: np.ndarray
    keys: List[StreamKey]
    updated: Optional[MsvrState] = None


@dataclass
class InnerBatches:
    blocks: np.ndarray
    values_at_xt: np.ndarray
    values_at_xprev: np.ndarray
    grads_at_xt: np.ndarray
    keys: List[StreamKey]
    updated: Optional[MsvrState] = None


def component_offsets(problem: ConstrainedProblem) -> List[np.ndarray]:
    """Flat tracker indices owned by each constraint."""
    offsets, start = [], 0
    for constraint in problem.constraints:
        size = len(constraint_components(constraint))
        offsets.append(np.arange(start, start + size))
        start += size
    return offsets


def draw_constraint_batches(problem: ConstrainedProblem, prev_point: np.ndarray, x_t: np.ndarray,
                            blocks: Sequence[int], batch_samples: int, streams: StreamFamily, t: int,
                            offsets: Optional[List[np.ndarray]] = None) -> ConstraintBatches:
    offsets = offsets or component_offsets(problem)
    touched, v_t, v_prev, grads, keys = [], [], [], [], []
    for k in blocks:
        for draw, oracle in enumerate(constraint_components(problem.constraints[k])):
            key = streams.draw(StreamRole.CONSTRAINT, k, t, draw)
            batch = oracle.sample_batch(key, batch_samples)
            at_xt = oracle.batch_value(x_t, batch)
            at_prev = oracle.batch_value(prev_point, batch)
            touched.append(offsets[k][draw])
            v_t.append(at_xt.value)
            v_prev.append(at_prev.value)
            grads.append(at_xt.grad)
            keys.append(key)
    return ConstraintBatches(blocks=np.asarray(blocks, dtype=int), touched=np.asarray(touched, dtype=int),
                             values_at_xt=np.asarray(v_t), values_at_xprev=np.asarray(v_prev),
                             grads_at_xt=np.asarray(grads).reshape(len(grads), -1), keys=keys)


def nested_constraint_grad(constraint: NestedAbsHingeConstraint, u_first: float, u_second: float,
                           grad_first: np.ndarray, grad_second: np.ndarray, kind: str = HINGE) -> np.ndarray:
    """xi(|u1 - u2| - kappa) * sign(u1 - u2) * (grad_first - grad_second), with sign(0) = 0."""
    gap = u_first - u_second
    weight = float(penalty_weights(abs(gap) - constraint.kappa, kind))
    return weight * np.sign(gap) * (np.asarray(grad_first) - np.asarray(grad_second))


def constraint_grad_from_batches(problem: ConstrainedProblem, batches: ConstraintBatches, u: np.ndarray,
                                 beta: float, kind: str = HINGE,
                                 offsets: Optional[List[np.ndarray]] = None) -> np.ndarray:
    """G2 = (beta/|B_c|) sum_{k in B_c} chain-rule subgradient of the penalty term at tracked values u."""
    offsets = offsets or component_offsets(problem)
    g2 = np.zeros(problem.dimension)
    if batches.blocks.size == 0:
        return g2
    row = {int(idx): pos for pos, idx in enumerate(batches.touched)}
    for k in batches.blocks:
        constraint = problem.constraints[k]
        flat = offsets[k]
        if isinstance(constraint, NestedAbsHingeConstraint):
            g2 += nested_constraint_grad(constraint, u[flat[0]], u[flat[1]], batches.grads_at_xt[row[flat[0]]],
                                         batches.grads_at_xt[row[flat[1]]], kind)
        else:
            g2 += float(penalty_weights(u[flat[0]], kind)) * batches.grads_at_xt[row[flat[0]]]
    return beta / batches.blocks.size * g2


def penalty_grad_estimate(problem: ConstrainedProblem, msvr_constraints: MsvrState, x_t, beta: float,
                          batch_constraints: int, batch_samples: int, streams: StreamFamily, t: int,
                          kind: str = HINGE, tracker_order: str = PRE_UPDATE,
                          offsets: Optional[List[np.ndarray]] = None) -> Tuple[np.ndarray, ConstraintBatches]:
    """
    Penalty-term estimator G2 at x_t.

    Samples B_c and draws each sampled constraint's batch once. The tracker is advanced on
    those batches (`batches.updated`); G2 reads u^t with `pre_update` and u^{t+1} with `post_update`.
    """
    if batch_constraints > problem.m:
        raise InvalidArgumentError(f"|B_c|={batch_constraints} exceeds m={problem.m}")
    if tracker_order not in TRACKER_ORDERS:
        raise InvalidArgumentError(f"Unknown tracker_order {tracker_order!r}")
    offsets = offsets or component_offsets(problem)
    x_t = as_point(x_t, problem.dimension)
    blocks = streams.sample_block(_CONSTRAINT_BLOCK_STREAM, t, problem.m, batch_constraints)
    batches = draw_constraint_batches(problem, msvr_constraints.prev_point, x_t, blocks, batch_samples, streams, t,
                                      offsets)
    batches.updated = _update_constraint_tracker(msvr_constraints, batches, x_t)
    u = batches.updated.u if tracker_order == POST_UPDATE else msvr_constraints.u
    return constraint_grad_from_batches(problem, batches, u, beta, kind, offsets), batches


def objective_grad_setting1(problem: ConstrainedProblem, x_t, batch_size: int, key: StreamKey) -> np.ndarray:
    """G1 = mini-batch mean subgradient of f(x_t; zeta)."""
    if problem.setting != 'I':
        raise InvalidArgumentError("objective_grad_setting1 needs a Setting-I objective")
    return eval_oracle(problem.objective, x_t, batch_size, key)[1]


def draw_inner_batches(fcco: FccoObjective, prev_point: np.ndarray, x_t: np.ndarray, blocks: Sequence[int],
                       batch_inner: int, streams: StreamFamily, t: int) -> InnerBatches:
    v_t, v_prev, grads, keys = [], [], [], []
    for i in blocks:
        oracle = fcco.inner[i]
        key = streams.draw(StreamRole.INNER, i, t)
        batch = oracle.sample_batch(key, batch_inner)
        at_xt = oracle.batch_value(x_t, batch)
        v_t.append(at_xt.value)
        v_prev.append(oracle.batch_value(prev_point, batch).value)
        grads.append(at_xt.grad)
        keys.append(key)
    return InnerBatches(blocks=np.asarray(blocks, dtype=int), values_at_xt=np.asarray(v_t),
                        values_at_xprev=np.asarray(v_prev), grads_at_xt=np.asarray(grads).reshape(len(grads), -1),
                        keys=keys)


def inner_grad_from_batches(fcco: FccoObjective, batches: InnerBatches, u: np.ndarray) -> np.ndarray:
    """G1 = (1/|B|) sum_{i in B} grad g_i(x_t; B_1,i) f_i'(u_i)."""
    g1 = np.zeros(fcco.dimension)
    for pos, i in enumerate(batches.blocks):
        slope = float(fcco.outer[i].derivative(u[i]))
        if fcco.condition == 'monotone' and slope < 0:
            raise MonotonicityError(
                f"Outer function {i} ('{fcco.outer[i].name}') has negative derivative {slope} at u={u[i]}",
                index=int(i), u=float(u[i]))
        g1 += slope * batches.grads_at_xt[pos]
    return g1 / max(1, batches.blocks.size)


def objective_grad_setting2(fcco: FccoObjective, msvr_inner: MsvrState, x_t, batch_outer: int, batch_inner: int,
                            streams: StreamFamily, t: int,
                            tracker_order: str = PRE_UPDATE) -> Tuple[np.ndarray, InnerBatches]:
    """Compositional estimator G1; the inner tracker advanced on the same batches is `batches.updated`."""
    if tracker_order not in TRACKER_ORDERS:
        raise InvalidArgumentError(f"Unknown tracker_order {tracker_order!r}")
    x_t = as_point(x_t, fcco.dimension)
    blocks = streams.sample_block(_OUTER_BLOCK_STREAM, t, fcco.n, batch_outer)
    batches = draw_inner_batches(fcco, msvr_inner.prev_point, x_t, blocks, batch_inner, streams, t)
    batches.updated = _update_inner_tracker(msvr_inner, batches, x_t)
    u = batches.updated.u if tracker_order == POST_UPDATE else msvr_inner.u
    return inner_grad_from_batches(fcco, batches, u), batches


def _update_constraint_tracker(state: MsvrState, batches: ConstraintBatches, x_t: np.ndarray) -> MsvrState:
    return msvr_update(state, batches.touched, batches.values_at_xt, batches.values_at_xprev, x_t,
                       keys_at_xt=batches.keys, keys_at_xprev=batches.keys)


def _update_inner_tracker(state: MsvrState, batches: InnerBatches, x_t: np.ndarray) -> MsvrState:
    return msvr_update(state, batches.blocks, batches.values_at_xt, batches.values_at_xprev, x_t,
                       keys_at_xt=batches.keys, keys_at_xprev=batches.keys)


class PenaltySolver:
    """Single-loop stochastic subgradient method on the hinge (or squared-hinge) penalty."""

    def __init__(self, problem: ConstrainedProblem, config: SolverConfig):
        self.problem = problem
        self.config = config
        self.batches = validate_config(problem, config)
        self.penalty = PenaltyObjective(problem, config.beta, config.kind)
        self.offsets = component_offsets(problem)
        self.streams = StreamFamily(config.seed, audit=config.audit_streams)
        self.warnings: List[Dict[str, str]] = []
        self.fcco = problem.objective if problem.setting == 'II' else None

    def _warn(self, code: str, message: str):
        logger.warning(f"[{self.config.name}] {message}")
        self.warnings.append({'code': code, 'message': message})

    def _check_beta(self):
        delta = self.config.delta if self.config.delta is not None else self.problem.constants.delta
        if delta is None:
            logger.debug(f"[{self.config.name}] no regularity constant declared, beta bound not checked")
            return
        bound = beta_lower_bound(self.config.epsilon, self.problem.constants.lipschitz_f, delta)
        if not self.config.beta > bound:
            self._warn('beta_below_bound',
                       f"beta={self.config.beta} does not exceed (epsilon + L_F)/delta = {bound:.6g}")

    def _init_trackers(self, x0: np.ndarray) -> Tuple[MsvrState, Optional[MsvrState]]:
        cfg, b = self.config, self.batches
        values = []
        for k, constraint in enumerate(self.problem.constraints):
            for draw, oracle in enumerate(constraint_components(constraint)):
                key = self.streams.draw(StreamRole.INIT, int(self.offsets[k][draw]), 0, _INIT_CONSTRAINT_DRAW)
                values.append(oracle.batch_value(x0, oracle.sample_batch(key, b.constraint_samples)).value)
        constraints = msvr_init(values, x0, cfg.gamma2, cfg.gamma2_prime, block=b.constraints, n_blocks=self.problem.m,
                                estimator=cfg.estimator, allow_large_gamma=cfg.allow_large_gamma,
                                label=f'{cfg.name}/constraints')
        if constraints.gamma_prime_override:
            self._warn('gamma_prime_override', f"constraint tracker gamma'={constraints.gamma_prime} overrides "
                                               f"closed form {constraints.metadata['gamma_prime_closed_form']:.6g}")
        if cfg.gamma2 > 0.5:
            self._warn('large_gamma', f"gamma2={cfg.gamma2} exceeds 1/2")
        if self.fcco is None:
            return constraints, None
        inner_values = []
        for i, oracle in enumerate(self.fcco.inner):
            key = self.streams.draw(StreamRole.INIT, i, 0, _INIT_INNER_DRAW)
            inner_values.append(oracle.batch_value(x0, oracle.sample_batch(key, b.inner)).value)
        inner = msvr_init(inner_values, x0, cfg.gamma1, cfg.gamma1_prime, block=b.outer, estimator=cfg.estimator,
                          allow_large_gamma=cfg.allow_large_gamma, label=f'{cfg.name}/inner')
        if inner.gamma_prime_override:
            self._warn('gamma_prime_override', f"inner tracker gamma'={inner.gamma_prime} overrides closed form "
                                               f"{inner.metadata['gamma_prime_closed_form']:.6g}")
        if cfg.gamma1 > 0.5:
            self._warn('large_gamma', f"gamma1={cfg.gamma1} exceeds 1/2")
        return constraints, inner

    def _record(self, t: int, x: np.ndarray, g1=None, g2=None, constraints: Optional[MsvrState] = None,
                inner: Optional[MsvrState] = None) -> TrajectoryRecord:
        record = TrajectoryRecord(t=t, x=x.copy(), eta=self.config.eta_at(t),
                                  gamma=self.config.gamma2 if constraints is not None else float('nan'))
        if g1 is not None:
            record.g1_norm = float(np.linalg.norm(g1))
            record.g2_norm = float(np.linalg.norm(g2))
        if not self.problem.has_exact:
            return record
        f_value, h_values, _, _ = exact_full_eval(self.problem, x)
        record.f = f_value
        record.h = h_values
        record.phi = f_value + self.penalty.penalty_term(h_values)
        record.max_violation = float(np.max(h_values))
        if constraints is not None:
            err = tracking_error(constraints, self.problem.exact_component_values(x))
            record.tracker_abs_constraints, record.tracker_sq_constraints = err.mean_abs, err.mean_sq
        if inner is not None:
            err = tracking_error(inner, self.fcco.exact_inner(x))
            record.tracker_abs_inner, record.tracker_sq_inner = err.mean_abs, err.mean_sq
        return record

    def _step(self, t: int, x: np.ndarray, constraints: MsvrState, inner: Optional[MsvrState]):
        cfg, b = self.config, self.batches
        if self.fcco is not None:
            g1, inner_batches = objective_grad_setting2(self.fcco, inner, x, b.outer, b.inner, self.streams, t,
                                                        tracker_order=cfg.tracker_order)
            inner = inner_batches.updated
        else:
            g1 = objective_grad_setting1(self.problem, x, b.outer, self.streams.draw(StreamRole.OBJECTIVE, 0, t))
        g2, batches = penalty_grad_estimate(self.problem, constraints, x, cfg.beta, b.constraints,
                                            b.constraint_samples, self.streams, t, kind=cfg.kind,
                                            tracker_order=cfg.tracker_order, offsets=self.offsets)
        return g1, g2, batches.updated, inner

    def run(self) -> RunResult:
        cfg = self.config
        started = time.perf_counter()
        x = as_point(cfg.x0 if cfg.x0 is not None else self.problem.x0, self.problem.dimension).copy()
        radius = self.problem.constants.box_radius
        stride = cfg.resolved_stride()
        self._check_beta()
        logger.info(f"[{cfg.name}] {self.problem.name}: setting {self.problem.setting}, kind={cfg.kind}, "
                    f"beta={cfg.beta}, eta={cfg.eta}, T={cfg.T}, tracker_order={cfg.tracker_order}, "
                    f"estimator={cfg.estimator}")
        constraints, inner = self._init_trackers(x)
        records: List[TrajectoryRecord] = []
        status, diagnostic = 'completed', None
        if cfg.T == 0:
            records.append(self._record(0, x, constraints=constraints, inner=inner))
        for t in range(cfg.T):
            g1, g2, constraints, inner = self._step(t, x, constraints, inner)
            if t % stride == 0:
                records.append(self._record(t, x, g1, g2, constraints, inner))
            x_next = x - cfg.eta_at(t) * (g1 + g2)
            norm = float(np.linalg.norm(x_next))
            if not np.all(np.isfinite(x_next)) or norm > DIVERGENCE_FACTOR * radius:
                reason = 'non_finite' if not np.all(np.isfinite(x_next)) else 'norm_exceeded'
                diagnostic = {'t': t + 1, 'reason': reason, 'norm': norm if np.isfinite(norm) else None,
                              'limit': DIVERGENCE_FACTOR * radius, 'last_finite_x': x.tolist()}
                status = 'aborted'
                logger.error(f"[{cfg.name}] run aborted at t={t + 1}: {reason} (norm={norm:.3g})")
                if records[-1].t != t:
                    records.append(self._record(t, x, g1, g2, constraints, inner))
                break
            x = x_next
        else:
            if cfg.T > 0:
                records.append(self._record(cfg.T, x, constraints=constraints, inner=inner))
        result = RunResult(
            name=cfg.name, problem_name=self.problem.name, setting=self.problem.setting, kind=cfg.kind,
            beta=cfg.beta, status=status, records=records, x_final=x.copy(), output_t=records[-1].t,
            output_x=records[-1].x, output_rule=cfg.output_rule, tracker_constraints=constraints.u.copy(),
            tracker_inner=None if inner is None else inner.u.copy(), warnings=self.warnings, diagnostic=diagnostic,
            config=cfg.to_dict(), draws=self.streams.draw_count)
        result.output_t, result.output_x = select_output(
            records, cfg.output_rule, self.streams.key(StreamRole.OUTPUT, 0, 0),
            diagnostic=self._diagnostic_score if self.problem.has_exact else None)
        result.wall_time = time.perf_counter() - started
        logger.info(f"[{cfg.name}] {status} after {records[-1].t} iterations; output t={result.output_t}, "
                    f"final max violation={records[-1].max_violation:.3g}")
        return result

    def _diagnostic_score(self, record: TrajectoryRecord) -> float:
        theta = self.config.theta or derived_constants(self.penalty).theta_default
        grad = moreau_grad(self.problem, record.x, theta, self.config.beta, kind=self.config.kind,
                           inner_iters=self.config.diagnostic_prox_iters, polish=False)
        return float(np.linalg.norm(grad)) + max(0.0, record.max_violation)


def select_output(records: Sequence[TrajectoryRecord], rule: str, key: StreamKey,
                  diagnostic: Optional[Callable[[TrajectoryRecord], float]] = None) -> Tuple[int, np.ndarray]:
    """
    Output iterate of a run.

    uniform_random picks uniformly among stored iterates with t >= 1 (t = 0 only when nothing else
    is stored); best_diagnostic minimises `diagnostic` over the same set, ties to the smallest t;
    final returns the last stored iterate.
    """
    if not records:
        raise InvalidArgumentError("select_output needs a nonempty trajectory")
    if rule not in OUTPUT_RULES:
        raise InvalidArgumentError(f"Unknown output rule {rule!r}")
    candidates = [r for r in records if r.t >= 1] or list(records)
    if rule == 'final':
        chosen = records[-1]
    elif rule == 'uniform_random':
        chosen = candidates[int(key.generator().integers(len(candidates)))]
    else:
        if diagnostic is None:
            logger.warning("best_diagnostic needs exact evaluators; falling back to the final iterate")
            chosen = records[-1]
        else:
            scores = [diagnostic(r) for r in candidates]
            chosen = candidates[int(np.argmin(scores))]
    return chosen.t, chosen.x.copy()


def solve_setting1(problem: ConstrainedProblem, config: SolverConfig) -> RunResult:
    if problem.setting != 'I':
        raise InvalidArgumentError(f"Problem '{problem.name}' has an FCCO objective; use solve_setting2")
    return PenaltySolver(problem, config).run()


def solve_setting2(problem: ConstrainedProblem, config: SolverConfig) -> RunResult:
    if problem.setting != 'II':
        raise InvalidArgumentError(f"Problem '{problem.name}' has a plain objective; use solve_setting1")
    return PenaltySolver(problem, config).run()


def solve(problem: ConstrainedProblem, config: SolverConfig) -> RunResult:
    if problem.setting == 'II':
        return solve_setting2(problem, config)
    return solve_setting1(problem, config)

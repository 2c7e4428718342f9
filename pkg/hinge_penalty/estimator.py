import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import BatchProvenanceError, InvalidArgumentError
from .streams import StreamKey

logger = logging.getLogger('hinge_penalty.estimator')

MSVR = 'msvr'
PLUGIN = 'plugin'
ESTIMATORS = (MSVR, PLUGIN)


def msvr_gamma_prime(n_total: int, block: int, gamma: float) -> float:
    """Correction weight (N - B) / (B (1 - gamma)) + 1 - gamma."""
    if not 1 <= block <= n_total:
        raise InvalidArgumentError(f"block must lie in [1, {n_total}], got {block}", block=block, n_total=n_total)
    if not 0 < gamma < 1:
        raise InvalidArgumentError(f"gamma must lie in (0, 1), got {gamma}", gamma=gamma)
    return (n_total - block) / (block * (1.0 - gamma)) + 1.0 - gamma


@dataclass
class MsvrState:
    """
    Tracked estimates u of N expectations.

    `prev_point` is the iterate at which the previous update was evaluated; the
    correction term of the next update compares batch values at x_t and there.
    `block_size` and `n_blocks` count sampled blocks, which differ from N when a
    block owns several tracked components (a nested constraint owns two).
    """
    u: np.ndarray
    gamma: float
    gamma_prime: float
    prev_point: np.ndarray
    n_total: int
    block_size: int
    n_blocks: Optional[int] = None
    estimator: str = MSVR
    gamma_prime_override: bool = False
    updates: int = 0
    metadata: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_blocks is None:
            self.n_blocks = self.n_total

    def __repr__(self) -> str:
        return (f"MsvrState(N={self.n_total}, block={self.block_size}, gamma={self.gamma}, "
                f"gamma_prime={self.gamma_prime}, estimator='{self.estimator}', updates={self.updates})")


def msvr_init(values: Sequence[float], x0, gamma: float, gamma_prime: Optional[float] = None, block: int = 1,
              n_blocks: Optional[int] = None, estimator: str = MSVR, allow_large_gamma: bool = False,
              label: str = 'tracker') -> MsvrState:
    """
    Start a tracker at the supplied initial batch estimates with prev_point = x0.

    When `gamma_prime` is None the closed form over `n_blocks` (default N) blocks is used;
    an explicit value that differs from it is kept and logged as an override.
    """
    if estimator not in ESTIMATORS:
        raise InvalidArgumentError(f"Unknown estimator {estimator!r}", estimator=estimator)
    u = np.array(values, dtype=float).reshape(-1)
    n_total = u.shape[0]
    n_blocks = n_total if n_blocks is None else int(n_blocks)
    if n_total < 1:
        raise InvalidArgumentError("A tracker needs at least one component")
    if not 0 < gamma < 1:
        raise InvalidArgumentError(f"gamma must lie in (0, 1), got {gamma}", gamma=gamma)
    if gamma > 0.5:
        if not allow_large_gamma:
            raise InvalidArgumentError(
                f"{label}: gamma={gamma} exceeds 1/2; set allow_large_gamma to use it", gamma=gamma)
        logger.warning(f"{label}: gamma={gamma} exceeds 1/2 (explicit override)")
    closed_form = msvr_gamma_prime(n_blocks, block, gamma)
    override = gamma_prime is not None and not np.isclose(gamma_prime, closed_form)
    if override:
        logger.warning(f"{label}: gamma'={gamma_prime} overrides the closed-form value {closed_form:.6g} "
                       f"(N={n_blocks}, block={block}, gamma={gamma})")
    return MsvrState(
        u=u,
        gamma=float(gamma),
        gamma_prime=float(closed_form if gamma_prime is None else gamma_prime),
        prev_point=np.array(x0, dtype=float),
        n_total=n_total,
        block_size=int(block),
        n_blocks=n_blocks,
        estimator=estimator,
        gamma_prime_override=override,
        metadata={'gamma_prime_closed_form': closed_form},
    )


def _check_provenance(keys_at_xt, keys_at_xprev):
    if keys_at_xt is None and keys_at_xprev is None:
        return
    if keys_at_xt is None or keys_at_xprev is None or len(keys_at_xt) != len(keys_at_xprev):
        raise BatchProvenanceError("Batch keys must be supplied for both iterates")
    for a, b in zip(keys_at_xt, keys_at_xprev):
        if not isinstance(a, StreamKey) or a != b:
            raise BatchProvenanceError(f"Values at x_t and x_prev come from different batches: {a!r} vs {b!r}",
                                       at_xt=a, at_xprev=b)


def msvr_update(state: MsvrState, touched: Sequence[int], vals_at_xt: Sequence[float],
                vals_at_xprev: Sequence[float], x_t, keys_at_xt: Optional[Sequence[StreamKey]] = None,
                keys_at_xprev: Optional[Sequence[StreamKey]] = None) -> MsvrState:
    """
    u_k <- (1-gamma) u_k + gamma v_t,k + gamma' (v_t,k - v_prev,k) for k in touched; others carried over.

    The plug-in estimator replaces u_k by v_t,k instead. Returns a new state with prev_point = x_t.
    """
    touched = np.asarray(touched, dtype=int).reshape(-1)
    v_t = np.asarray(vals_at_xt, dtype=float).reshape(-1)
    v_prev = np.asarray(vals_at_xprev, dtype=float).reshape(-1)
    if touched.size and (touched.min() < 0 or touched.max() >= state.n_total):
        raise InvalidArgumentError(f"Touched index out of range [0, {state.n_total})", touched=touched.tolist())
    if len(set(touched.tolist())) != touched.size:
        raise InvalidArgumentError("Touched indices must be distinct", touched=touched.tolist())
    if v_t.shape != touched.shape or v_prev.shape != touched.shape:
        raise InvalidArgumentError("One value at x_t and one at x_prev is required per touched index")
    _check_provenance(keys_at_xt, keys_at_xprev)
    u = state.u.copy()
    if state.estimator == PLUGIN:
        u[touched] = v_t
    else:
        u[touched] = (1.0 - state.gamma) * u[touched] + state.gamma * v_t + state.gamma_prime * (v_t - v_prev)
    return replace(state, u=u, prev_point=np.array(x_t, dtype=float), updates=state.updates + 1)


@dataclass(frozen=True)
class TrackingError:
    mean_abs: float
    mean_sq: float


def tracking_error(state: MsvrState, exact_values: Sequence[float]) -> TrackingError:
    diff = state.u - np.asarray(exact_values, dtype=float).reshape(-1)
    if diff.shape[0] != state.n_total:
        raise InvalidArgumentError(f"Expected {state.n_total} exact values, got {diff.shape[0]}")
    return TrackingError(mean_abs=float(np.mean(np.abs(diff))), mean_sq=float(np.mean(diff * diff)))


def contraction_factor(state: MsvrState) -> float:
    """Expected per-step contraction of mean_abs on a noise-free frozen iterate, 1 - block*gamma/N_blocks."""
    return 1.0 - state.block_size * state.gamma / state.n_blocks

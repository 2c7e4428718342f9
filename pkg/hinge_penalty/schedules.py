import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .errors import InvalidArgumentError, ScheduleError

logger = logging.getLogger('hinge_penalty.schedules')

SETTING_I = 'I'
SETTING_II_MONOTONE = 'II-monotone'
SETTING_II_SMOOTH = 'II-smooth'
SETTINGS = (SETTING_I, SETTING_II_MONOTONE, SETTING_II_SMOOTH)

GAMMA_CAP = 0.5


@dataclass(frozen=True)
class ScheduleMultipliers:
    c_gamma: float = 1.0
    c_eta: float = 1.0
    c_T: float = 1.0

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, float]]) -> 'ScheduleMultipliers':
        data = dict(data or {})
        unknown = set(data) - {'c_gamma', 'c_eta', 'c_T'}
        if unknown:
            raise InvalidArgumentError(f"Unknown schedule multipliers: {sorted(unknown)}")
        multipliers = cls(**data)
        for name, value in multipliers.__dict__.items():
            if not value > 0:
                raise InvalidArgumentError(f"Schedule multiplier {name} must be positive, got {value}")
        return multipliers


@dataclass
class Schedule:
    setting: str
    epsilon: float
    beta: float
    gamma1: Optional[float]
    gamma2: float
    eta: float
    T: int
    flags: List[str] = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class BatchSizes:
    """|B| outer blocks, |B_c| constraint blocks, |B_1,i| inner samples, |B_2,k| constraint samples."""
    outer: int = 1
    constraints: int = 1
    inner: int = 1
    constraint_samples: int = 1


def _clamp_gamma(name: str, gamma: float, flags: List[str]) -> float:
    if not gamma > 0 or not math.isfinite(gamma):
        raise ScheduleError(f"Schedule produced {name}={gamma}", gamma=gamma)
    if gamma > GAMMA_CAP:
        logger.warning(f"Schedule {name}={gamma:.6g} clamped to {GAMMA_CAP}")
        flags.append(f'{name}_clamped')
        return GAMMA_CAP
    return gamma


def schedule_from_theorem(setting: str, epsilon: float, beta: float, batches: BatchSizes, m: int, n: int = 1,
                          multipliers: Optional[ScheduleMultipliers] = None) -> Schedule:
    """
    Parameter schedule of the convergence theorems with every O(.) replaced by multiplier * expression.

    Setting I:
        gamma2 = B2 eps^4 / beta^4
        eta    = Bc sqrt(B2) eps^4 / (beta^5 m)
        T      = beta^6 m / (Bc sqrt(B2) eps^6)
    Setting II, monotone outer functions:
        gamma1 = gamma2 = min(B1, B2/beta^2) eps^4 / beta^2
        eta    = min(B/n, Bc/(beta m)) min(sqrt(B1), sqrt(B2)/beta) eps^4 / beta^3
        T      = max(beta/sqrt(B1), beta^2/sqrt(B2), 1/B1) max(n/B, beta m/Bc) beta^3 / eps^6
    Setting II, smooth outer functions:
        gamma1 = gamma2 = min(B2 eps^4/beta^4, B1 eps^2/beta)
        eta    = min(B sqrt(B1) eps^2/(n beta^2), Bc sqrt(B2) eps^4/(beta^5 m))
        T      = max(m beta^6/(sqrt(B2) Bc eps^6), n beta^3/(B sqrt(B1) eps^4), n beta^2/(B B1 eps^4))

    Tracking rates are clamped to (0, 1/2]; T is rounded up.
    """
    if setting not in SETTINGS:
        raise InvalidArgumentError(f"Unknown schedule setting {setting!r}; expected one of {SETTINGS}")
    if not epsilon > 0 or not beta > 0:
        raise InvalidArgumentError(f"epsilon and beta must be positive, got epsilon={epsilon}, beta={beta}")
    mult = multipliers or ScheduleMultipliers()
    B, Bc, B1, B2 = batches.outer, batches.constraints, batches.inner, batches.constraint_samples
    if min(B, Bc, B1, B2) < 1 or m < 1 or n < 1:
        raise InvalidArgumentError("Batch sizes, m and n must be positive")
    eps, b = float(epsilon), float(beta)

    if setting == SETTING_I:
        gamma = B2 * eps ** 4 / b ** 4
        eta = Bc * math.sqrt(B2) * eps ** 4 / (b ** 5 * m)
        T = b ** 6 * m / (Bc * math.sqrt(B2) * eps ** 6)
    elif setting == SETTING_II_MONOTONE:
        gamma = min(B1, B2 / b ** 2) * eps ** 4 / b ** 2
        eta = min(B / n, Bc / (b * m)) * min(math.sqrt(B1), math.sqrt(B2) / b) * eps ** 4 / b ** 3
        T = max(b / math.sqrt(B1), b ** 2 / math.sqrt(B2), 1.0 / B1) * max(n / B, b * m / Bc) * b ** 3 / eps ** 6
    else:
        gamma = min(B2 * eps ** 4 / b ** 4, B1 * eps ** 2 / b)
        eta = min(B * math.sqrt(B1) * eps ** 2 / (n * b ** 2), Bc * math.sqrt(B2) * eps ** 4 / (b ** 5 * m))
        T = max(m * b ** 6 / (math.sqrt(B2) * Bc * eps ** 6), n * b ** 3 / (B * math.sqrt(B1) * eps ** 4),
                n * b ** 2 / (B * B1 * eps ** 4))

    flags: List[str] = []
    gamma2 = _clamp_gamma('gamma2', mult.c_gamma * gamma, flags)
    gamma1 = None if setting == SETTING_I else _clamp_gamma('gamma1', mult.c_gamma * gamma, flags)
    eta = mult.c_eta * eta
    if not eta > 0 or not math.isfinite(eta):
        raise ScheduleError(f"Schedule produced eta={eta}", eta=eta)
    iterations = mult.c_T * T
    if not math.isfinite(iterations):
        raise ScheduleError(f"Schedule produced T={iterations}", T=iterations)
    schedule = Schedule(setting=setting, epsilon=eps, beta=b, gamma1=gamma1, gamma2=gamma2, eta=eta,
                        T=int(math.ceil(iterations)), flags=flags)
    logger.debug(f"Schedule {setting} for eps={eps}, beta={b}: {schedule}")
    return schedule


def setting_for(problem) -> str:
    """Schedule family matching a problem: Setting I, or Setting II with its outer-function condition."""
    if problem.setting == 'I':
        return SETTING_I
    return SETTING_II_MONOTONE if problem.objective.condition == 'monotone' else SETTING_II_SMOOTH

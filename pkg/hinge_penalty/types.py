import math
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

TRAJECTORY_COLUMNS = ['t', 'phi_exact', 'f_exact', 'max_violation', 'g1_norm', 'g2_norm',
                      'tracker_mean_abs_constraints', 'tracker_mean_abs_inner', 'eta_t']
TRACKER_COLUMNS = ['gamma_t', 'tracker_mean_sq_constraints', 'tracker_mean_sq_inner']


def _floats(values) -> Optional[List[float]]:
    if values is None:
        return None
    return [float(v) for v in np.asarray(values).reshape(-1)]


def _nan_to_none(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


@dataclass
class TrajectoryRecord:
    t: int
    x: np.ndarray
    phi: float = math.nan
    f: float = math.nan
    max_violation: float = math.nan
    h: Optional[np.ndarray] = None
    g1_norm: float = math.nan
    g2_norm: float = math.nan
    tracker_abs_constraints: float = math.nan
    tracker_sq_constraints: float = math.nan
    tracker_abs_inner: float = math.nan
    tracker_sq_inner: float = math.nan
    eta: float = math.nan
    gamma: float = math.nan

    def __repr__(self) -> str:
        return f"TrajectoryRecord(t={self.t}, phi={self.phi:.6g}, max_violation={self.max_violation:.3g})"

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        if self.t != other.t or not np.array_equal(self.x, other.x):
            return False
        if (self.h is None) != (other.h is None):
            return False
        if self.h is not None and not np.array_equal(self.h, other.h, equal_nan=True):
            return False
        return np.array_equal(self._scalars(), other._scalars(), equal_nan=True)

    def _scalars(self) -> List[float]:
        return [getattr(self, f.name) for f in fields(self) if f.name not in ('t', 'x', 'h')]


@dataclass
class RunResult:
    name: str
    problem_name: str
    setting: str
    kind: str
    beta: float
    status: str
    records: List[TrajectoryRecord]
    x_final: np.ndarray
    output_t: int
    output_x: np.ndarray
    output_rule: str
    tracker_constraints: Optional[np.ndarray] = None
    tracker_inner: Optional[np.ndarray] = None
    warnings: List[Dict[str, str]] = field(default_factory=list)
    diagnostic: Optional[Dict[str, Any]] = None
    config: Dict[str, Any] = field(default_factory=dict)
    draws: int = 0
    wall_time: float = 0.0

    @property
    def aborted(self) -> bool:
        return self.status == 'aborted'

    @property
    def final_record(self) -> TrajectoryRecord:
        return self.records[-1]

    def trajectory_frame(self) -> pd.DataFrame:
        """Trajectory table: the fixed columns, tracker columns, then x_1..x_d."""
        rows = []
        for r in self.records:
            row = {
                't': r.t, 'phi_exact': r.phi, 'f_exact': r.f, 'max_violation': r.max_violation,
                'g1_norm': r.g1_norm, 'g2_norm': r.g2_norm,
                'tracker_mean_abs_constraints': r.tracker_abs_constraints,
                'tracker_mean_abs_inner': r.tracker_abs_inner, 'eta_t': r.eta, 'gamma_t': r.gamma,
                'tracker_mean_sq_constraints': r.tracker_sq_constraints,
                'tracker_mean_sq_inner': r.tracker_sq_inner,
            }
            for i, xi in enumerate(r.x):
                row[f'x_{i + 1}'] = float(xi)
            rows.append(row)
        return pd.DataFrame(rows)

    def constraint_frame(self, epoch_length: int) -> Optional[pd.DataFrame]:
        """Per-record exact constraint values h_1..h_m with an epoch column; None without exact evaluators."""
        rows = []
        for r in self.records:
            if r.h is None:
                return None
            row = {'t': r.t, 'epoch': r.t / epoch_length}
            for k, value in enumerate(r.h):
                row[f'h_{k + 1}'] = float(value)
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self) -> Dict[str, Any]:
        final = self.final_record
        return {
            'name': self.name,
            'problem': self.problem_name,
            'setting': self.setting,
            'kind': self.kind,
            'beta': self.beta,
            'status': self.status,
            'output_rule': self.output_rule,
            'output_t': int(self.output_t),
            'output_x': _floats(self.output_x),
            'x_final': _floats(self.x_final),
            'final_phi': _nan_to_none(final.phi),
            'final_f': _nan_to_none(final.f),
            'final_max_violation': _nan_to_none(final.max_violation),
            'tracker_constraints': _floats(self.tracker_constraints),
            'tracker_inner': _floats(self.tracker_inner),
            'warnings': list(self.warnings),
            'diagnostic': self.diagnostic,
            'config': self.config,
            'draws': int(self.draws),
            'wall_time': float(self.wall_time),
        }

    def __repr__(self) -> str:
        return (f"RunResult(name='{self.name}', status='{self.status}', records={len(self.records)}, "
                f"output_t={self.output_t})")


@dataclass
class ProxResult:
    x_bar: np.ndarray
    value: float
    lower_bound: float
    iterations: int
    converged: bool
    polished: bool = False

    @property
    def gap(self) -> float:
        return max(0.0, self.value - self.lower_bound)


@dataclass
class KktCertificate:
    """Nearly epsilon-KKT certificate of x through the proximal reference point x_bar."""
    x: np.ndarray
    x_bar: np.ndarray
    multipliers: np.ndarray
    stationarity: float
    feasibility: float
    complementarity: float
    displacement: float
    theta: float
    beta: float
    moreau_grad_norm: float
    prox_gap: float
    prox_converged: bool

    @property
    def epsilon(self) -> float:
        return max(self.stationarity, max(self.feasibility, 0.0), self.complementarity)

    @property
    def displacement_ratio(self) -> float:
        return self.displacement / self.epsilon if self.epsilon > 0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': _floats(self.x),
            'x_bar': _floats(self.x_bar),
            'multipliers': _floats(self.multipliers),
            'stationarity': float(self.stationarity),
            'feasibility': float(self.feasibility),
            'complementarity': float(self.complementarity),
            'epsilon': float(self.epsilon),
            'displacement': float(self.displacement),
            'displacement_ratio': None if math.isinf(self.displacement_ratio) else float(self.displacement_ratio),
            'theta': float(self.theta),
            'beta': float(self.beta),
            'moreau_grad_norm': float(self.moreau_grad_norm),
            'prox_gap': float(self.prox_gap),
            'prox_converged': bool(self.prox_converged),
        }

    def __repr__(self) -> str:
        return (f"KktCertificate(epsilon={self.epsilon:.3g}, stationarity={self.stationarity:.3g}, "
                f"feasibility={self.feasibility:.3g}, complementarity={self.complementarity:.3g})")


@dataclass
class PointRegularity:
    label: str
    x: np.ndarray
    violating: List[int]
    sigma_min: Optional[float]
    delta: Optional[float]
    below_floor: bool = False

    @property
    def vacuous(self) -> bool:
        return not self.violating

    def to_dict(self) -> Dict[str, Any]:
        return {'label': self.label, 'x': _floats(self.x), 'violating': list(self.violating),
                'sigma_min': self.sigma_min, 'delta': self.delta, 'below_floor': self.below_floor}


@dataclass
class PlEstimate:
    mu: Optional[float]
    c: float
    delta: Optional[float]
    vacuous: bool
    depth_flag: bool = False
    grid_points: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class RegularityReport:
    points: List[PointRegularity]
    floor: float
    pl: Optional[PlEstimate] = None

    @property
    def all_vacuous(self) -> bool:
        return all(p.vacuous for p in self.points)

    @property
    def min_sigma(self) -> Optional[float]:
        values = [p.sigma_min for p in self.points if p.sigma_min is not None]
        return min(values) if values else None

    def table(self) -> pd.DataFrame:
        """Minimum singular value per violating snapshot."""
        return pd.DataFrame([{'label': p.label, 'violating': len(p.violating), 'sigma_min': p.sigma_min,
                              'delta': p.delta, 'below_floor': p.below_floor}
                             for p in self.points if not p.vacuous],
                            columns=['label', 'violating', 'sigma_min', 'delta', 'below_floor'])

    def to_dict(self) -> Dict[str, Any]:
        return {'floor': self.floor, 'all_vacuous': self.all_vacuous, 'min_sigma': self.min_sigma,
                'points': [p.to_dict() for p in self.points],
                'pl': None if self.pl is None else self.pl.to_dict()}


@dataclass
class SlackReport:
    point: np.ndarray
    multipliers: np.ndarray
    lagrangian_grad_norm: float
    equality_residual: float
    slack_stationary: bool
    multipliers_nonnegative: bool
    original_kkt_residual: float
    descent_direction: float
    directional_derivative: float
    descent_feasible: bool
    perturbation: float
    perturbed_residual: float

    @property
    def not_minimal(self) -> bool:
        return self.descent_feasible and self.directional_derivative < 0

    def to_dict(self) -> Dict[str, Any]:
        data = {k: (_floats(v) if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        data['not_minimal'] = self.not_minimal
        return data

import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from mkdocs.config import base
from mkdocs.config import config_options as c

from .errors import ConfigError, SerializationError
from .estimator import ESTIMATORS
from .penalty import PENALTY_KINDS
from .solver import OUTPUT_RULES, TRACKER_ORDERS, SolverConfig

logger = logging.getLogger('hinge_penalty.config')

SCHEMA_VERSION = 1
_NUMBER = (int, float)
_UNKNOWN_KEY = re.compile(r"Unrecognised configuration name: (\S+)")

SOLVER_SCHEME = (
    ('name', c.Type(str, required=True)),
    ('beta', c.Type(_NUMBER, required=True)),
    ('eta', c.Type(_NUMBER, default=None)),
    ('T', c.Type(int, default=None)),
    ('seed', c.Type(int, default=None)),
    ('gamma1', c.Type(_NUMBER, default=0.5)),
    ('gamma2', c.Type(_NUMBER, default=0.5)),
    ('gamma1_prime', c.Type(_NUMBER, default=None)),
    ('gamma2_prime', c.Type(_NUMBER, default=None)),
    ('batch_outer', c.Type(int, default=None)),
    ('batch_constraints', c.Type(int, default=None)),
    ('batch_inner', c.Type(int, default=1)),
    ('batch_constraint_samples', c.Type(int, default=1)),
    ('kind', c.Choice(PENALTY_KINDS, default='hinge')),
    ('estimator', c.Choice(ESTIMATORS, default='msvr')),
    ('tracker_order', c.Choice(TRACKER_ORDERS, default='pre_update')),
    ('output_rule', c.Choice(OUTPUT_RULES, default='uniform_random')),
    ('stride', c.Type(int, default=None)),
    ('x0', c.Type(list, default=None)),
    ('eta_decay_milestones', c.Type(list, default=[])),
    ('eta_decay_factor', c.Type(_NUMBER, default=10.0)),
    ('schedule_epsilon', c.Type(_NUMBER, default=None)),
    ('schedule_multipliers', c.Type(dict, default={})),
    ('allow_large_gamma', c.Type(bool, default=False)),
    ('epsilon', c.Type(_NUMBER, default=0.1)),
    ('delta', c.Type(_NUMBER, default=None)),
    ('theta', c.Type(_NUMBER, default=None)),
    ('diagnostic_prox_iters', c.Type(int, default=300)),
    ('audit_streams', c.Type(bool, default=False)),
)

COMPARE_SCHEME = (
    ('base', c.Type(str, default=None)),
    ('kinds', c.ListOfItems(c.Choice(PENALTY_KINDS), default=list(PENALTY_KINDS))),
    ('betas', c.ListOfItems(c.Type(_NUMBER), default=[])),
)

SWEEP_SCHEME = (
    ('base', c.Type(str, default=None)),
    ('epsilons', c.ListOfItems(c.Type(_NUMBER), default=[])),
    ('multipliers', c.ListOfItems(c.Type(dict), default=[{}])),
    ('max_iterations', c.Type(int, default=2_000_000)),
)

CERTIFICATION_SCHEME = (
    ('enabled', c.Type(bool, default=True)),
    ('theta', c.Type(_NUMBER, default=None)),
    ('prox_iters', c.Type(int, default=10_000)),
    ('tol', c.Type(_NUMBER, default=1e-6)),
    ('activation_tol', c.Type(_NUMBER, default=1e-5)),
    ('snapshot_stride', c.Type(int, default=None)),
    ('max_snapshots', c.Type(int, default=20)),
    ('sigma_floor', c.Type(_NUMBER, default=1e-8)),
    ('pl_grid', c.Type(list, default=None)),
)

CONFIG_SCHEME = (
    ('schema_version', c.Choice((SCHEMA_VERSION,), required=True)),
    ('instance', c.Type(dict, default=None)),
    ('instance_path', c.Type(str, default=None)),
    ('solvers', c.ListOfItems(c.SubConfig(*SOLVER_SCHEME, validate=True), default=[])),
    ('compare', c.SubConfig(*COMPARE_SCHEME, validate=True)),
    ('sweep', c.SubConfig(*SWEEP_SCHEME, validate=True)),
    ('certification', c.SubConfig(*CERTIFICATION_SCHEME, validate=True)),
    ('output_dir', c.Type(str, default='runs')),
    ('workers', c.Type(int, default=None)),
    ('master_seed', c.Type(int, default=0)),
    ('epoch_length', c.Type(int, default=400)),
    ('paired', c.Type(bool, default=True)),
)


def derive_seed(master_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], 'big') & 0x7FFFFFFFFFFFFFFF


def _plain(value):
    if isinstance(value, base.Config) or isinstance(value, dict):
        return {k: _plain(v) for k, v in dict(value).items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def _line_of(text: str, name: str) -> Optional[int]:
    position = text.find(f'"{name}"')
    return None if position < 0 else text.count('\n', 0, position) + 1


@dataclass
class ExperimentConfig:
    schema_version: int
    solvers: List[Dict[str, Any]]
    compare: Dict[str, Any]
    sweep: Dict[str, Any]
    certification: Dict[str, Any]
    output_dir: str
    workers: int
    master_seed: int
    epoch_length: int
    paired: bool
    instance: Optional[Dict[str, Any]] = None
    instance_path: Optional[str] = None
    source: Optional[str] = None
    config_hash: str = ''
    raw: Dict[str, Any] = field(default_factory=dict)

    def instance_spec(self) -> Dict[str, Any]:
        """Inline instance spec, or the one stored in the instance document at `instance_path`."""
        if self.instance is not None:
            return dict(self.instance)
        path = Path(self.instance_path)
        if not path.is_absolute() and self.source:
            path = Path(self.source).parent / path
        try:
            document = json.loads(path.read_text(encoding='utf-8'))
        except (OSError, json.JSONDecodeError) as e:
            raise SerializationError(f"Cannot read instance document {path}: {e}") from e
        return {'kind': document['kind'], **document['params']}

    def solver_section(self, name: Optional[str]) -> Dict[str, Any]:
        if not self.solvers:
            raise ConfigError("No solver sections configured")
        if name is None:
            return dict(self.solvers[0])
        for section in self.solvers:
            if section['name'] == name:
                return dict(section)
        raise ConfigError(f"Unknown solver section '{name}'")

    def seed_for(self, name: str) -> int:
        return derive_seed(self.master_seed, name)


def solver_config_from_section(section: Dict[str, Any], seed: int) -> SolverConfig:
    """SolverConfig for one validated solver section; an explicit `seed` key wins over the derived seed."""
    if section.get('schedule_epsilon') is None and (section.get('eta') is None or section.get('T') is None):
        raise ConfigError(f"Solver '{section['name']}' needs eta and T unless schedule_epsilon is set")
    values = {k: v for k, v in section.items() if v is not None}
    values['eta_decay_milestones'] = tuple(values.get('eta_decay_milestones', ()))
    values['seed'] = section.get('seed') if section.get('seed') is not None else seed
    # replaced by the schedule when schedule_epsilon is set
    values.setdefault('eta', 1.0)
    values.setdefault('T', 0)
    return SolverConfig(**values)


def load_experiment_config(path: str, output_dir: Optional[str] = None, workers: Optional[int] = None,
                           seed_override: Optional[int] = None, stride: Optional[int] = None) -> ExperimentConfig:
    """Read, validate and resolve an experiment config; CLI overrides win over the file."""
    load_dotenv()
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict):
        raise ConfigError("Config must be a JSON object", line=1)

    config = base.LegacyConfig(CONFIG_SCHEME, config_file_path=path)
    config.load_dict(data)
    failed, warnings = config.validate()
    errors = list(failed) + [(key, w) for key, w in warnings if _UNKNOWN_KEY.search(str(w))]
    if errors:
        key, message = errors[0]
        unknown = _UNKNOWN_KEY.search(str(message))
        anchor = unknown.group(1).strip("'\"") if unknown else key
        raise ConfigError(f"'{key}': {message}", line=_line_of(text, anchor) or _line_of(text, key))
    for key, message in warnings:
        logger.warning(f"Config option '{key}': {message}")

    values = _plain(config)
    if (values['instance'] is None) == (values['instance_path'] is None):
        raise ConfigError("Exactly one of 'instance' and 'instance_path' must be given",
                          line=_line_of(text, 'instance') or _line_of(text, 'instance_path') or 1)
    names = [section['name'] for section in values['solvers']]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigError(f"Solver names must be unique, repeated: {duplicates}",
                          line=_line_of(text, 'solvers'))

    if output_dir is not None:
        values['output_dir'] = output_dir
    if workers is not None:
        values['workers'] = workers
    if values['workers'] is None:
        values['workers'] = int(os.environ.get('HPO_WORKERS', '1'))
    if seed_override is not None:
        values['master_seed'] = seed_override
        for section in values['solvers']:
            section['seed'] = None
    if stride is not None:
        for section in values['solvers']:
            section['stride'] = stride
    if values['workers'] < 1:
        raise ConfigError(f"workers must be positive, got {values['workers']}", line=_line_of(text, 'workers'))

    canonical = json.dumps(values, sort_keys=True, separators=(',', ':'))
    logger.debug(f"Loaded experiment config {path}")
    return ExperimentConfig(
        schema_version=values['schema_version'], solvers=values['solvers'], compare=values['compare'],
        sweep=values['sweep'], certification=values['certification'], output_dir=values['output_dir'],
        workers=values['workers'], master_seed=values['master_seed'], epoch_length=values['epoch_length'],
        paired=values['paired'], instance=values['instance'], instance_path=values['instance_path'],
        source=str(path), config_hash=hashlib.sha256(canonical.encode()).hexdigest()[:16], raw=values)

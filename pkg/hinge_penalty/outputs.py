import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .errors import MalformedCsvError, SerializationError
from .types import TRAJECTORY_COLUMNS, RunResult

logger = logging.getLogger('hinge_penalty.outputs')

SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.17g'
RUN_FILE = 'run.json'
TRAJECTORY_FILE = 'trajectory.csv'
CONSTRAINTS_FILE = 'constraints.csv'
CERTIFICATE_FILE = 'certificate.json'


def jsonable(value: Any) -> Any:
    """numpy scalars and arrays to builtins, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: Path, data: Dict[str, Any]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {'schema_version': SCHEMA_VERSION, **jsonable(data)}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    logger.debug(f"Wrote {path}")


def read_json(path: Path) -> Dict[str, Any]:
    try:
        document = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, json.JSONDecodeError) as e:
        raise SerializationError(f"Cannot read {path}: {e}") from e
    if document.get('schema_version') != SCHEMA_VERSION:
        raise SerializationError(f"{path} has unsupported schema_version {document.get('schema_version')!r}")
    return document


def write_frame(path: Path, frame: pd.DataFrame):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def write_run(cell_dir: Path, result: RunResult, provenance: Dict[str, Any], epoch_length: int = 400) -> Path:
    """run.json, trajectory.csv and (with exact evaluators) constraints.csv of one solver run."""
    cell_dir = Path(cell_dir)
    cell_dir.mkdir(parents=True, exist_ok=True)
    write_frame(cell_dir / TRAJECTORY_FILE, result.trajectory_frame())
    constraints = result.constraint_frame(epoch_length)
    if constraints is not None:
        write_frame(cell_dir / CONSTRAINTS_FILE, constraints)
    write_json(cell_dir / RUN_FILE, {**result.to_dict(),
                                     'provenance': {'code_version': __version__, **provenance}})
    logger.info(f"Run '{result.name}' written to {cell_dir}")
    return cell_dir


def read_trajectory(path: Path, required: Sequence[str] = TRAJECTORY_COLUMNS) -> pd.DataFrame:
    """Load a trajectory or constraint CSV, rejecting empty files, missing columns and non-numeric cells."""
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as e:
        raise MalformedCsvError(f"{path} does not exist", path=str(path)) from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise MalformedCsvError(f"{path} is not a readable CSV: {e}", path=str(path)) from e
    if frame.empty:
        raise MalformedCsvError(f"{path} has no rows", path=str(path))
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise MalformedCsvError(f"{path} lacks columns {missing}", path=str(path))
    non_numeric = [column for column in frame.columns if not pd.api.types.is_numeric_dtype(frame[column])]
    if non_numeric:
        raise MalformedCsvError(f"{path} has non-numeric columns {non_numeric}", path=str(path))
    return frame


def trajectory_points(frame: pd.DataFrame) -> np.ndarray:
    columns = sorted((c for c in frame.columns if c.startswith('x_')), key=lambda c: int(c[2:]))
    if not columns:
        raise MalformedCsvError("Trajectory has no x_i columns")
    return frame[columns].to_numpy(dtype=float)


def write_summary(path: Path, rows: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None):
    write_frame(path, pd.DataFrame(list(rows), columns=columns))

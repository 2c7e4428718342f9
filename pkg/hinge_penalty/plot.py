import io
import logging
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .errors import MalformedCsvError  # noqa: E402
from .outputs import CONSTRAINTS_FILE, TRAJECTORY_FILE, read_trajectory  # noqa: E402

logger = logging.getLogger('hinge_penalty.plot')

PANELS = ('constraints', 'objective')
_STANDARD_NAMES = {TRAJECTORY_FILE, CONSTRAINTS_FILE}

matplotlib.rcParams['svg.hashsalt'] = 'hinge-penalty'
matplotlib.rcParams['svg.fonttype'] = 'none'


def _stem(path: Path) -> str:
    return path.parent.name if path.name in _STANDARD_NAMES and path.parent.name else path.stem


def _constraint_columns(frame: pd.DataFrame) -> List[str]:
    return sorted((c for c in frame.columns if c.startswith('h_')), key=lambda c: int(c[2:]))


def _render(figure) -> bytes:
    buffer = io.BytesIO()
    figure.savefig(buffer, format='svg', metadata={'Date': None})
    plt.close(figure)
    return buffer.getvalue()


def constraints_panel(frame: pd.DataFrame, title: str) -> bytes:
    """Every constraint value against epoch, with the feasibility boundary at 0."""
    figure, ax = plt.subplots(figsize=(7, 4))
    for column in _constraint_columns(frame):
        ax.plot(frame['epoch'], frame[column], linewidth=1, label=column)
    ax.axhline(0.0, color='black', linewidth=0.8, linestyle='--')
    ax.set_xlabel('epoch')
    ax.set_ylabel('constraint value')
    ax.set_title(title)
    if len(_constraint_columns(frame)) <= 16:
        ax.legend(fontsize='x-small', ncol=2)
    figure.tight_layout()
    return _render(figure)


def objective_panel(frame: pd.DataFrame, title: str) -> bytes:
    """Exact objective (left axis) and max constraint violation (right axis) against iteration."""
    figure, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frame['t'], frame['f_exact'], color='tab:blue', linewidth=1)
    ax.set_xlabel('iteration')
    ax.set_ylabel('objective', color='tab:blue')
    twin = ax.twinx()
    twin.plot(frame['t'], frame['max_violation'], color='tab:red', linewidth=1)
    twin.axhline(0.0, color='tab:red', linewidth=0.8, linestyle=':')
    twin.set_ylabel('max violation', color='tab:red')
    ax.set_title(title)
    figure.tight_layout()
    return _render(figure)


def _load(path: Path) -> Dict[str, pd.DataFrame]:
    """Panels a CSV can feed: constraint files give 'constraints', trajectory files give 'objective'."""
    frame = read_trajectory(path, required=('t',))
    panels = {}
    if 'epoch' in frame.columns and _constraint_columns(frame):
        panels['constraints'] = frame
    if {'f_exact', 'max_violation'} <= set(frame.columns):
        panels['objective'] = frame
    if not panels:
        raise MalformedCsvError(f"{path} is neither a trajectory nor a constraint CSV", path=str(path))
    return panels


def cmd_plot(csv_paths: Sequence[str], out_path: str, panels: Sequence[str] = PANELS) -> int:
    """Render SVG panels for each CSV into `out_path`; nothing is written unless every CSV is valid."""
    unknown = set(panels) - set(PANELS)
    if unknown:
        raise MalformedCsvError(f"Unknown panels {sorted(unknown)}")
    loaded = [(Path(p), _load(Path(p))) for p in csv_paths]
    rendered = {}
    for path, frames in loaded:
        stem = _stem(path)
        if 'constraints' in panels and 'constraints' in frames:
            rendered[f'{stem}_constraints.svg'] = constraints_panel(frames['constraints'], stem)
        if 'objective' in panels and 'objective' in frames:
            rendered[f'{stem}_objective.svg'] = objective_panel(frames['objective'], stem)
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    for name, svg in rendered.items():
        (out / name).write_bytes(svg)
        logger.info(f"Wrote {out / name}")
    return 0

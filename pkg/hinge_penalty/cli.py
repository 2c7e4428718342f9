import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from . import __version__
from .errors import ConfigError, HingePenaltyError, MalformedCsvError, MissingExactEvaluatorError
from .plot import PANELS, cmd_plot
from .run_experiments import cmd_certify, cmd_compare, cmd_run, cmd_sweep

logger = logging.getLogger('hinge_penalty.cli')

LOG_LEVELS = {'error': logging.ERROR, 'warn': logging.WARNING, 'warning': logging.WARNING,
              'info': logging.INFO, 'debug': logging.DEBUG}

EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_MISSING_EXACT = 4
EXIT_MALFORMED_CSV = 5


def abort(msg: str, code: int) -> int:
    print(f"ERROR: {msg}", file=sys.stderr)
    return code


def configure_logging():
    load_dotenv()
    name = os.environ.get('HPO_LOG_LEVEL', 'info').lower()
    level = LOG_LEVELS.get(name)
    logging.basicConfig(level=level or logging.INFO, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    if level is None:
        logger.warning(f"Unknown HPO_LOG_LEVEL '{name}', using info")


def _add_config_command(subparsers, name: str, help_text: str):
    parser = subparsers.add_parser(name, help=help_text)
    parser.add_argument('--config', required=True, help='experiment config (JSON)')
    parser.add_argument('--out', help='output directory, overrides output_dir')
    parser.add_argument('--workers', type=int, help='parallel worker processes')
    parser.add_argument('--seed-override', type=int, help='replace master_seed and every per-solver seed')
    parser.add_argument('--stride', type=int, help='trajectory snapshot stride for every solver')
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='hinge-penalty',
                                     description='Hinge exact penalty solvers, certification and experiments.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)
    _add_config_command(subparsers, 'run', 'run every named solver config')
    _add_config_command(subparsers, 'compare', 'hinge vs squared-hinge over a beta grid')
    _add_config_command(subparsers, 'sweep', 'theorem schedules over epsilon targets and multipliers')

    certify = subparsers.add_parser('certify', help='nearly-KKT certificates and regularity report for a run')
    certify.add_argument('--run', required=True, help='run directory (or its run.json)')
    certify.add_argument('--instance', required=True, help='instance document (JSON)')
    certify.add_argument('--theta', type=float, help='Moreau parameter, default 1/(2C)')
    certify.add_argument('--tol', type=float, default=1e-6, help='prox suboptimality tolerance')
    certify.add_argument('--prox-iters', type=int, default=10_000)
    certify.add_argument('--activation-tol', type=float, default=1e-5)
    certify.add_argument('--stride', type=int, help='certify every stride-th trajectory snapshot')
    certify.add_argument('--max-snapshots', type=int, default=20)
    certify.add_argument('--pl-grid', type=float, nargs=3, metavar=('LOW', 'HIGH', 'STEP'))
    certify.add_argument('--out', help='directory for certificate outputs, default the run directory')

    plot = subparsers.add_parser('plot', help='SVG charts from trajectory / constraint CSVs')
    plot.add_argument('csv', nargs='+', help='trajectory.csv or constraints.csv files')
    plot.add_argument('--out', required=True, help='output directory')
    plot.add_argument('--panels', nargs='+', choices=PANELS, default=list(PANELS))
    return parser


def dispatch(args: argparse.Namespace) -> int:
    if args.command in ('run', 'compare', 'sweep'):
        command = {'run': cmd_run, 'compare': cmd_compare, 'sweep': cmd_sweep}[args.command]
        return command(args.config, output_dir=args.out, workers=args.workers, seed_override=args.seed_override,
                       stride=args.stride)
    if args.command == 'certify':
        return cmd_certify(args.run, args.instance, theta=args.theta, tol=args.tol, prox_iters=args.prox_iters,
                           activation_tol=args.activation_tol, snapshot_stride=args.stride,
                           max_snapshots=args.max_snapshots, pl_grid=args.pl_grid, output_dir=args.out)
    return cmd_plot(args.csv, args.out, args.panels)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return dispatch(args)
    except ConfigError as e:
        return abort(f"config: {e}", EXIT_CONFIG)
    except MissingExactEvaluatorError as e:
        return abort(str(e), EXIT_MISSING_EXACT)
    except MalformedCsvError as e:
        return abort(str(e), EXIT_MALFORMED_CSV)
    except HingePenaltyError as e:
        return abort(f"{e.code}: {e}", EXIT_UNEXPECTED)
    except Exception as e:
        logger.exception("Unexpected failure")
        return abort(f"{type(e).__name__}: {e}", EXIT_UNEXPECTED)


if __name__ == '__main__':
    sys.exit(main())

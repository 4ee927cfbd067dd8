"""
Command-line entry point: run_cli(argv) -> exit code

0 on success, 1 when a check fails or an internal error occurred (a
diagnostic.txt traceback is written), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import structlog
from django.conf import settings

from core.exceptions import ConfigError, InvalidParams, UnknownRun
from core.models import generate_cuid
from core.services.experiment_harness import ExperimentHarness, ExperimentHarnessFactory
from core.utils.experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
COMMANDS = ('simulate', 'wave', 'classify', 'track', 'verify', 'sweep', 'report')

# flag destination -> (config section, config key)
FLAG_SECTIONS = {
    'a': ('params', 'a'), 'b': ('params', 'b'), 'd': ('params', 'd'), 'r': ('params', 'r'),
    'L': ('wave', 'L'), 'n': ('wave', 'n'), 'tol': ('wave', 'tol'), 'asymptotics': ('wave', 'asymptotics'),
    't_end': ('simulation', 't_end'), 'h': ('simulation', 'h'), 'dt': ('simulation', 'dt'),
    'x_min': ('simulation', 'x_min'), 'x_max': ('simulation', 'x_max'),
    'snapshot_every': ('simulation', 'snapshot_every'), 'scenario': ('simulation', 'scenario'),
    'v_floor': ('simulation', 'v_floor'), 'u_support': ('simulation', 'u_support'),
    'v_support': ('simulation', 'v_support'),
    'level': ('tracking', 'level'), 'direction': ('tracking', 'direction'),
    'window_start': ('tracking', 'window_start'), 'window_end': ('tracking', 'window_end'),
    'mode': ('verify', 'mode'), 't_span': ('verify', 't_span'), 'half_width': ('verify', 'half_width'),
    'slack_factor': ('verify', 'slack_factor'),
    'a_values': ('sweep', 'a'), 'b_values': ('sweep', 'b'), 'd_values': ('sweep', 'd'),
    'r_values': ('sweep', 'r'), 'kind': ('sweep', 'kind'), 'max_workers': ('sweep', 'max_workers'),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse without sys.exit on bad input"""

    def error(self, message):
        raise UsageError(message)


def add_params_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='experiment INI file; flags override its values')
    for name in ('a', 'b', 'd', 'r'):
        parser.add_argument(f'--{name}', type=float)


def add_wave_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--L', type=float, help='half-width of the wave domain')
    parser.add_argument('--n', type=int, help='number of wave grid points')
    parser.add_argument('--tol', type=float, help='bisection tolerance for c*')


def add_simulation_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--t-end', dest='t_end', type=float)
    parser.add_argument('--h', type=float)
    parser.add_argument('--dt', type=float)
    parser.add_argument('--x-min', dest='x_min', type=float)
    parser.add_argument('--x-max', dest='x_max', type=float)
    parser.add_argument('--snapshot-every', dest='snapshot_every', type=float)
    parser.add_argument('--scenario', choices=['A', 'B', 'wave'])
    parser.add_argument('--v-floor', dest='v_floor', type=float)
    parser.add_argument('--u-support', dest='u_support', help='lo,hi')
    parser.add_argument('--v-support', dest='v_support', help='lo,hi')


def add_command_arguments(command: str, parser: argparse.ArgumentParser) -> None:
    """Flags of one subcommand; shared with the manage.py commands"""
    if command == 'report':
        parser.add_argument('run_id')
        return
    add_params_arguments(parser)
    if command in ('wave', 'track', 'verify', 'simulate', 'sweep'):
        add_wave_arguments(parser)
    if command in ('simulate', 'track', 'verify', 'sweep'):
        add_simulation_arguments(parser)
    if command == 'wave':
        parser.add_argument('--asymptotics', action='store_const', const='true',
                            help='also fit the tail rates of the profile')
    if command == 'track':
        parser.add_argument('--level', type=float)
        parser.add_argument('--direction', choices=['rightmost', 'leftmost'])
        parser.add_argument('--window-start', dest='window_start', type=float)
        parser.add_argument('--window-end', dest='window_end', type=float)
    if command == 'verify':
        parser.add_argument('--mode', choices=['residuals', 'sandwich', 'comparison', 'statements', 'all'])
        parser.add_argument('--t-span', dest='t_span', type=float)
        parser.add_argument('--half-width', dest='half_width', type=float)
        parser.add_argument('--slack-factor', dest='slack_factor', type=float)
    if command == 'sweep':
        for name in ('a', 'b', 'd', 'r'):
            parser.add_argument(f'--{name}-values', dest=f'{name}_values', help='comma-separated grid')
        parser.add_argument('--kind', choices=['simulate', 'wave', 'classify', 'track', 'verify'])
        parser.add_argument('--max-workers', dest='max_workers', type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='lv_lab', description='Strong-weak competition-diffusion laboratory')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    for command in COMMANDS:
        add_command_arguments(command, sub.add_parser(command))
    return parser


def overrides_from_options(options: Mapping[str, Any]) -> Dict[str, Dict[str, Any]]:
    overrides: Dict[str, Dict[str, Any]] = {}
    for dest, (section, key) in FLAG_SECTIONS.items():
        if options.get(dest) is not None:
            overrides.setdefault(section, {})[key] = options[dest]
    return overrides


def _write_diagnostic(harness: ExperimentHarness, text: str) -> Path:
    if harness.current is not None:
        manifest = harness.current.manifest
        path = harness.repository.write_text(manifest, 'diagnostic.txt', text)
        harness.repository.save_manifest(manifest)
        return path
    root = Path(settings.RUNS_ROOT)
    root.mkdir(parents=True, exist_ok=True)
    path = root / f'diagnostic-{generate_cuid()}.txt'
    path.write_text(text, encoding='utf-8')
    return path


def execute(command: str, options: Mapping[str, Any], harness: Optional[ExperimentHarness] = None,
            out=None, err=None) -> int:
    """Run one subcommand from parsed options"""
    out = out or sys.stdout
    err = err or sys.stderr
    harness = harness or ExperimentHarnessFactory.create_harness()
    log = structlog.get_logger('core.cli').bind(command=command)
    try:
        if command == 'report':
            out.write(harness.report(options['run_id']))
            return EXIT_OK
        config = ExperimentConfig.load(options['config']) if options.get('config') else ExperimentConfig()
        config.apply_overrides(overrides_from_options(options))
        outcome = harness.run(command, config)
    except (ConfigError, InvalidParams, UnknownRun) as exc:
        err.write(f'error: {exc.message}\n')
        log.warning('usage error', error_code=exc.error_code)
        return EXIT_USAGE
    except Exception as exc:
        logger.exception(f"{command} failed")
        path = _write_diagnostic(harness, traceback.format_exc())
        err.write(f'error: {exc}; diagnostic written to {path}\n')
        return EXIT_FAILED

    out.write(outcome.summary + '\n')
    log.info('command finished', run_id=outcome.manifest.run_id, passed=outcome.passed)
    return EXIT_OK if outcome.passed else EXIT_FAILED


def run_cli(argv: Sequence[str], harness: Optional[ExperimentHarness] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    argv: List[str] = list(argv)
    if not argv:
        parser.print_help(err)
        return EXIT_USAGE
    try:
        options = vars(parser.parse_args(argv))
    except UsageError as exc:
        parser.print_help(err)
        err.write(f'\nerror: {exc}\n')
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if options.get('command') is None:
        parser.print_help(err)
        return EXIT_USAGE
    return execute(options.pop('command'), options, harness, out, err)

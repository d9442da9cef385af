# src/main.py
"""
Command-line entry point of the torus optimal transport lab.

Discovers the *_pipeline.py modules, parses the command line into a
CliInvocation and runs the matching pipeline. Exit codes: 0 success,
1 violated bound or missed acceptance band (or any other lab error),
2 usage or configuration error.

Example:
    $ python src/main.py rate --config configs/d1.toml --seed 7 --deterministic-names
    $ python src/main.py verify-lemma --config configs/default.toml --jobs 4
    $ python src/main.py plot --input results/rate_d1.json --out results/rate_d1.svg
"""

import argparse
import asyncio
import importlib
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from core.config import config
from core.constants import EXIT_CODES, ERROR_MESSAGES, LAB_NAME, LAB_VERSION
from core.exceptions import ConfigurationError, LabError
from core.logging import setup_logging, log_with_timestamp
from core.models import CliInvocation, SUBCOMMANDS
from pipelines.pipeline_registry import pipeline_registry

CONSOLE_LEVELS = {0: 'WARNING', 1: 'INFO'}


def _discover_pipeline_modules() -> List[str]:
    """Discover pipeline modules in the pipelines directory."""
    pipelines_dir = Path(__file__).parent / 'pipelines'
    return sorted(path.stem for path in pipelines_dir.glob('*_pipeline.py'))


def _load_pipeline_module(module_name: str) -> Optional[Any]:
    """Load a pipeline module and return it."""
    try:
        return importlib.import_module(f'pipelines.{module_name}')
    except Exception as e:
        log_with_timestamp(f"Error loading pipeline module {module_name}: {e}", "Main", "warning")
        return None


def _register_pipeline_from_module(module: Any, module_name: str) -> int:
    """Register pipelines from a loaded module."""
    if hasattr(module, 'register_pipelines'):
        module.register_pipelines()
        log_with_timestamp(f"Registered pipelines from {module_name}", "Main", "debug")
        return 1
    return 0


def register_all_pipelines() -> int:
    """Register all available pipelines; returns the number of modules registered."""
    pipeline_modules = _discover_pipeline_modules()
    total_registered = 0

    for module_name in pipeline_modules:
        module = _load_pipeline_module(module_name)
        if module:
            total_registered += _register_pipeline_from_module(module, module_name)

    if total_registered == 0:
        log_with_timestamp("No pipelines found. Add *_pipeline.py modules to src/pipelines/", "Main", "warning")
    return total_registered


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=LAB_NAME,
        description="Convergence rates of empirical measures in Wasserstein distance on the flat torus",
    )
    parser.add_argument('--version', action='version', version=f"{LAB_NAME} {LAB_VERSION}")
    subparsers = parser.add_subparsers(dest='subcommand', metavar='subcommand', required=True)

    for name in SUBCOMMANDS:
        info = pipeline_registry.get_pipeline(name) or {}
        sub = subparsers.add_parser(name, help=info.get('description'))
        if name == 'plot':
            sub.add_argument('--input', dest='input_path', type=Path, required=True,
                             help="rate report JSON")
            sub.add_argument('--out', dest='output', type=Path, required=True,
                             help="SVG file or output directory")
            sub.add_argument('--reference-slope', type=float, default=None,
                             help="slope of the dashed guide (default: the report's reference)")
        else:
            sub.add_argument('--config', dest='config_path', type=Path, required=True,
                             help="TOML config file")
            sub.add_argument('--out', dest='output', type=Path, default=None,
                             help="output directory (default: TORUS_OT_LAB_OUTPUT_DIR)")
            sub.add_argument('--seed', type=int, default=None, help="master seed override (u64)")
            sub.add_argument('--jobs', type=int, default=None,
                             help="concurrent workers (default: TORUS_OT_LAB_JOBS, then 1)")
        if name == 'rate':
            sub.add_argument('--solver', choices=['exact', 'entropic'], default=None)
            sub.add_argument('--epsilon', type=float, default=None, help="entropic regularization")
        sub.add_argument('--deterministic-names', action='store_true',
                         help="omit timestamps from file names and zero runtimes")
        sub.add_argument('-v', '--verbose', dest='verbosity', action='count', default=0)
    return parser


def parse_invocation(argv: Optional[Sequence[str]] = None) -> CliInvocation:
    """
    Parse argv into a validated CliInvocation.

    Raises:
        SystemExit: argparse usage errors (code 2) and --help (code 0)
        ConfigurationError: values outside their domain
    """
    args = build_parser().parse_args(argv)
    try:
        return CliInvocation(**{key: value for key, value in vars(args).items() if value is not None})
    except PydanticValidationError as e:
        raise ConfigurationError(
            "Invalid command line",
            {'errors': e.errors(include_url=False, include_input=False)}
        )


def _report_error(message: str) -> None:
    sys.stderr.write(f"{LAB_NAME}: {message}\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point; returns the exit code."""
    register_all_pipelines()
    try:
        invocation = parse_invocation(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CODES['USAGE']
    except ConfigurationError as e:
        _report_error(str(e))
        return EXIT_CODES['USAGE']

    console_level = CONSOLE_LEVELS.get(invocation.verbosity, 'DEBUG')
    setup_logging(config.log_level, config.log_file, console_level)
    log_with_timestamp(f"Starting {LAB_NAME} {invocation.subcommand}", "Main")

    pipeline = pipeline_registry.get_pipeline_instance(invocation.subcommand)
    if pipeline is None:
        _report_error(ERROR_MESSAGES['PIPELINE_NOT_FOUND'].format(invocation.subcommand))
        return EXIT_CODES['USAGE']

    try:
        status = asyncio.run(pipeline.execute(invocation))
    except ConfigurationError as e:
        _report_error(str(e))
        return EXIT_CODES['USAGE']
    except LabError as e:
        _report_error(str(e))
        return EXIT_CODES['VIOLATED']

    log_with_timestamp(f"{invocation.subcommand} finished with exit code {status}", "Main")
    return status


if __name__ == "__main__":
    sys.exit(main())

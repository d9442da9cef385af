# src/core/config.py
"""
Settings and config files for the torus optimal transport lab.

Two layers: process settings (LabSettings, filled from TORUS_OT_LAB_*
variables and .env) held by the module-level `config`, and the per-run TOML
files read into ExperimentConfig or LemmaSuiteConfig. Any failure in either
layer surfaces as ConfigurationError, which the CLI maps to exit code 2.
"""

import tomllib
from pathlib import Path
from typing import Dict, Any, Optional, Union, TypeVar, Type

from pydantic import BaseModel, ValidationError as PydanticValidationError

from .models import LabSettings
from .exceptions import ConfigurationError
from .constants import ERROR_MESSAGES

T = TypeVar('T')
M = TypeVar('M', bound=BaseModel)

# Table holding each model in a config file; a flat document is accepted too
CONFIG_TABLES = {
    'ExperimentConfig': 'experiment',
    'LemmaSuiteConfig': 'suite',
}


def _build_settings(action: str, **values: Any) -> LabSettings:
    try:
        return LabSettings(**values)
    except Exception as e:
        raise ConfigurationError(f"Failed to {action} lab settings: {e}", {'error': str(e), 'values': values})


class Config:
    """
    Process-wide lab settings.

    `update` re-validates, so tests and the CLI can override a setting
    without touching os.environ; `reload` re-reads the environment.
    """

    def __init__(self) -> None:
        self._settings = _build_settings('load')

    def reload(self) -> None:
        self._settings = _build_settings('reload')

    def update(self, **kwargs) -> None:
        """Replace settings values; raises ConfigurationError when the result is invalid."""
        self._settings = _build_settings('update', **{**self._settings.model_dump(), **kwargs})

    def get(self, key: str, default: Optional[T] = None) -> Union[T, Any]:
        """Look a setting up by name, ignoring case."""
        return getattr(self._settings, key.lower(), default)

    def get_str(self, key: str, default: str = '') -> str:
        value = self.get(key)
        return default if value is None else str(value)

    def get_int(self, key: str, default: int = 0) -> int:
        try:
            return int(self.get(key, default))
        except (ValueError, TypeError):
            return default

    def to_dict(self) -> Dict[str, Any]:
        return self._settings.model_dump()

    @property
    def log_level(self) -> str:
        return self._settings.log_level

    @property
    def log_file(self) -> Optional[str]:
        return self._settings.log_file

    @property
    def jobs(self) -> int:
        """Default worker count when --jobs is absent."""
        return self._settings.jobs

    @property
    def output_dir(self) -> str:
        return self._settings.output_dir

    @property
    def exact_atom_cap(self) -> int:
        """Largest support the network simplex solver accepts."""
        return self._settings.exact_atom_cap

    @property
    def sinkhorn_max_iter(self) -> int:
        """Iteration budget of each Sinkhorn annealing stage."""
        return self._settings.sinkhorn_max_iter


def validate_config_data(data: Dict[str, Any], model: Type[M], source: str = '<memory>') -> M:
    """
    Validate a configuration mapping against a pydantic model.

    Raises:
        ConfigurationError: carrying the pydantic error list
    """
    try:
        return model.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError(
            ERROR_MESSAGES['CONFIG_INVALID'].format(source),
            {'path': source, 'errors': e.errors(include_url=False, include_input=False)}
        )


def load_config_file(path: Union[str, Path], model: Type[M]) -> M:
    """
    Load a TOML config file into the given model.

    The model's table ([experiment] or [suite]) is used when present,
    otherwise the whole document.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(
            ERROR_MESSAGES['CONFIG_NOT_FOUND'].format(path),
            {'path': str(path)}
        )
    try:
        with path.open('rb') as handle:
            document = tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(
            f"Malformed TOML in {path}: {e}",
            {'path': str(path), 'error': str(e)}
        )
    table = CONFIG_TABLES.get(model.__name__)
    data = document.get(table, document) if table else document
    return validate_config_data(data, model, str(path))


def apply_overrides(model: M, **overrides: Any) -> M:
    """Return a re-validated copy of a config with non-None overrides applied."""
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return model
    data = model.model_dump()
    data.update(updates)
    return validate_config_data(data, type(model), 'command line')


# Global configuration instance
config = Config()

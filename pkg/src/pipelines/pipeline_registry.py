# src/pipelines/pipeline_registry.py
"""
Subcommand registry.

Every *_pipeline.py module hands its pipeline object to register_pipeline();
main.py then builds the argument parser and dispatches from this table.
Only names listed in core.models.SUBCOMMANDS are accepted.
"""

from typing import Dict, Any, List, Optional
from core.logging import log_with_timestamp
from core.models import SUBCOMMANDS

_COMPONENT = "Pipeline Registry"
_INFO_KEYS = ('name', 'description', 'execute')


class PipelineRegistry:
    """Maps a subcommand to its pipeline object and the info dict it publishes."""

    def __init__(self):
        self._info: Dict[str, Dict[str, Any]] = {}
        self._by_subcommand: Dict[str, Any] = {}

    def register_pipeline(self, pipeline_instance: Any) -> bool:
        """
        Add a pipeline under the subcommand it names.

        Returns:
            False when the object publishes no usable info or names an
            unknown subcommand; a second registration replaces the first.
        """
        describe = getattr(pipeline_instance, 'get_pipeline_info', None)
        if describe is None:
            log_with_timestamp(f"{type(pipeline_instance).__name__} has no get_pipeline_info", _COMPONENT, "error")
            return False

        info = describe()
        if not self.validate_pipeline(info):
            return False
        subcommand = info['name']
        if subcommand not in SUBCOMMANDS:
            log_with_timestamp(f"'{subcommand}' is not a lab subcommand", _COMPONENT, "error")
            return False

        if subcommand in self._by_subcommand:
            log_with_timestamp(f"Replacing the '{subcommand}' pipeline", _COMPONENT, "debug")
        self._info[subcommand] = info
        self._by_subcommand[subcommand] = pipeline_instance
        log_with_timestamp(f"'{subcommand}' -> {type(pipeline_instance).__name__}", _COMPONENT, "debug")
        return True

    def get_pipeline(self, name: str) -> Optional[Dict[str, Any]]:
        return self._info.get(name)

    def get_pipeline_instance(self, name: str) -> Optional[Any]:
        return self._by_subcommand.get(name)

    def list_pipeline_names(self) -> List[str]:
        return sorted(self._by_subcommand)

    @staticmethod
    def validate_pipeline(pipeline_info: Dict[str, Any]) -> bool:
        """An info dict needs a name, a description and a callable execute."""
        absent = [key for key in _INFO_KEYS if key not in pipeline_info]
        if absent:
            log_with_timestamp(f"Pipeline info lacks {absent}", _COMPONENT, "error")
            return False
        if not callable(pipeline_info['execute']):
            log_with_timestamp(f"execute of '{pipeline_info['name']}' is not callable", _COMPONENT, "error")
            return False
        return True


pipeline_registry = PipelineRegistry()


def register_pipeline(pipeline_instance: Any) -> bool:
    return pipeline_registry.register_pipeline(pipeline_instance)


def get_pipeline(name: str) -> Optional[Dict[str, Any]]:
    return pipeline_registry.get_pipeline(name)


def get_pipeline_instance(name: str) -> Optional[Any]:
    return pipeline_registry.get_pipeline_instance(name)


def list_pipeline_names() -> List[str]:
    return pipeline_registry.list_pipeline_names()


__all__ = [
    'PipelineRegistry',
    'pipeline_registry',
    'register_pipeline',
    'get_pipeline',
    'get_pipeline_instance',
    'list_pipeline_names',
]

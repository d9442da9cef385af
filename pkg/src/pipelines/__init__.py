"""
Experiment pipelines, one per CLI subcommand.

Each *_pipeline.py module defines a BasePipeline subclass and a
register_pipelines() hook; main.py discovers the modules and registers
them in the global PipelineRegistry.

Example:
    >>> from pipelines.pipeline_registry import get_pipeline_instance
    >>> pipeline = get_pipeline_instance('rate')
    >>> exit_code = asyncio.run(pipeline.execute(invocation))
"""

from .pipeline_registry import (
    PipelineRegistry,
    pipeline_registry,
    register_pipeline,
    get_pipeline,
    get_pipeline_instance,
    list_pipeline_names,
)

__all__ = [
    'PipelineRegistry',
    'pipeline_registry',
    'register_pipeline',
    'get_pipeline',
    'get_pipeline_instance',
    'list_pipeline_names',
]

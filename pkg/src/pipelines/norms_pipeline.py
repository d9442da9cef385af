# src/pipelines/norms_pipeline.py
"""Relations between the negative Sobolev norm and its surrogates on random fields."""

from pipelines.base_pipeline import SuitePipeline
from pipelines.pipeline_registry import register_pipeline


class NormsPipeline(SuitePipeline):
    sections = ('norms',)

    def __init__(self):
        super().__init__('norms', 'Check norm sandwich, Beckmann consistency and weak duality')


def register_pipelines():
    register_pipeline(NormsPipeline())

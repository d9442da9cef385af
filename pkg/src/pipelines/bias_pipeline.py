# src/pipelines/bias_pipeline.py
"""Bias of the smoothed density over a ladder of bandwidths."""

from pipelines.base_pipeline import SuitePipeline
from pipelines.pipeline_registry import register_pipeline


class BiasPipeline(SuitePipeline):
    sections = ('bias',)

    def __init__(self):
        super().__init__('bias', 'Check ||A(f_h - f)||_p over a ladder of bandwidths')


def register_pipelines():
    register_pipeline(BiasPipeline())

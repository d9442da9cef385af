"""
Unit tests for pipeline registry functionality.
"""

import pytest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / 'src'))

from core.models import SUBCOMMANDS
from pipelines import PipelineRegistry, get_pipeline, get_pipeline_instance, list_pipeline_names
from pipelines.rate_pipeline import RatePipeline
from pipelines.norms_pipeline import NormsPipeline


class TestPipelineRegistry:
    """Test pipeline registry functionality."""

    @pytest.fixture
    def registry(self):
        return PipelineRegistry()

    def test_register_pipeline(self, registry):
        """Test pipeline registration."""
        pipeline = RatePipeline()
        assert registry.register_pipeline(pipeline) is True
        assert registry.get_pipeline('rate')['name'] == 'rate'
        assert registry.get_pipeline_instance('rate') is pipeline

    def test_get_pipeline(self, registry):
        """Test getting pipeline info from the registry."""
        pipeline = NormsPipeline()
        registry.register_pipeline(pipeline)
        info = registry.get_pipeline('norms')
        assert info['name'] == 'norms'
        assert info['description'] == pipeline.description
        assert callable(info['execute'])
        assert registry.get_pipeline('missing') is None

    def test_reregistration_replaces(self, registry):
        first, second = RatePipeline(), RatePipeline()
        registry.register_pipeline(first)
        registry.register_pipeline(second)
        assert registry.get_pipeline_instance('rate') is second
        assert registry.list_pipeline_names() == ['rate']

    def test_list_pipeline_names(self, registry):
        """Test listing all pipeline names."""
        registry.register_pipeline(RatePipeline())
        registry.register_pipeline(NormsPipeline())
        assert registry.list_pipeline_names() == ['norms', 'rate']

    def test_rejects_unknown_subcommand(self, registry):
        pipeline = RatePipeline()
        pipeline.name = 'transport'
        assert registry.register_pipeline(pipeline) is False
        assert registry.get_pipeline_instance('transport') is None
        assert registry.list_pipeline_names() == []

    def test_rejects_objects_without_info(self, registry):
        assert registry.register_pipeline(object()) is False
        assert registry.list_pipeline_names() == []

    def test_validate_pipeline(self, registry):
        assert registry.validate_pipeline({'name': 'x', 'description': 'd', 'execute': print})
        assert not registry.validate_pipeline({'name': 'x', 'description': 'd'})
        assert not registry.validate_pipeline({'name': 'x', 'description': 'd', 'execute': 'run'})


class TestPipelineDiscovery:
    """Test discovery of the *_pipeline.py modules."""

    def test_every_subcommand_registered(self):
        from main import register_all_pipelines

        assert register_all_pipelines() == len(SUBCOMMANDS)
        assert list_pipeline_names() == sorted(SUBCOMMANDS)
        for name in SUBCOMMANDS:
            assert get_pipeline(name)['name'] == name
            assert get_pipeline_instance(name).name == name

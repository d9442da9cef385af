"""
Test suite for the torus optimal transport lab.

- tests/unit/ - one module per lab, core or tools module
- tests/integration/ - pipelines and the command line end to end
"""

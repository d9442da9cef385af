# scripts/run.py
"""
Script to run lab subcommands from the repository root.

    python scripts/run.py rate --config configs/smoke.toml --deterministic-names
"""
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from main import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

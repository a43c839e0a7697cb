"""
Thin entry point; same as the `extremescore` console script.

Usage:
    uv run python main.py sim-scale --seed 1 --out out/scale
"""

import sys

from extremescore.cli import main

if __name__ == "__main__":
    sys.exit(main())

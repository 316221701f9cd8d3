"""Entry point for the MCCS miner.

Run with: uv run python -m src.main --help
"""

import sys

from src.cli import run


def main() -> None:
    """Console-script entry point."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

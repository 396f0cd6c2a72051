"""Run a config through the CLI and print the per-experiment verdicts.

    python3 scripts/run_config.py configs/acceptance.json runs/acceptance [--only a,b]
"""
import sys

from asep.cli import main

if __name__ == "__main__":
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    sys.exit(main(["run", "--config", sys.argv[1], "--out", sys.argv[2], *sys.argv[3:]]))

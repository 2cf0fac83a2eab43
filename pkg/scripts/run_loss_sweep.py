#!/usr/bin/env python3
"""Run the planted-graph loss sweep with the shipped preset.

Extra command-line flags are forwarded to `gbsdense loss-sweep` and
override the defaults below, since later occurrences of a flag win.
"""

import sys
from pathlib import Path

from gbsdense.cli import main

ROOT = Path(__file__).resolve().parent.parent
DEFAULTS = [
    "loss-sweep",
    "--config",
    str(ROOT / "configs" / "loss_sweep.toml"),
    "--out",
    str(ROOT / "results" / "loss_sweep"),
]

if __name__ == "__main__":
    raise SystemExit(main(DEFAULTS + sys.argv[1:]))

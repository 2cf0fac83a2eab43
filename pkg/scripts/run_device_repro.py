#!/usr/bin/env python3
"""Run the reference-device reproduction with the shipped preset.

Extra command-line flags are forwarded to `gbsdense device-repro` and
override the defaults below, since later occurrences of a flag win.
"""

import sys
from pathlib import Path

from gbsdense.cli import main

ROOT = Path(__file__).resolve().parent.parent
DEFAULTS = [
    "device-repro",
    "--config",
    str(ROOT / "configs" / "device_reproduction.toml"),
    "--out",
    str(ROOT / "results" / "device_reproduction"),
]

if __name__ == "__main__":
    raise SystemExit(main(DEFAULTS + sys.argv[1:]))

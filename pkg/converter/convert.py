#!/usr/bin/env python3
"""Entry point: export a public benchmark as a graph bundle directory."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from bundleconvert.cli import main

if __name__ == "__main__":
    sys.exit(main())

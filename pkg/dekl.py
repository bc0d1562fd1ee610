#!/usr/bin/env python3
"""Command-line entry point for the DEKL proof checker and analyzer."""

import sys

from dotenv import load_dotenv

# Settings are read at import time, so the environment must be loaded first.
load_dotenv()

from core.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())

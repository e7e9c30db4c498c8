#!/usr/bin/env python3
"""Run the exact-invariant battery and print one line per check."""

import sys

from dyadlab.cli import main

if __name__ == "__main__":
    sys.exit(main(["invariants", *sys.argv[1:]]))

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Run Script for the blockpf experiment harness.

Launches the CLI from the repository root without installing the package.
"""

import os
import sys
from pathlib import Path


def run_application():
    """Put the repository root on sys.path and run the CLI."""
    script_dir = Path(os.path.dirname(os.path.abspath(__file__)))
    sys.path.insert(0, str(script_dir))

    from blockpf.cli import main

    return main()


if __name__ == "__main__":
    sys.exit(run_application())

"""
Entry point for running density_sieve as a module.

Usage: python -m density_sieve <command>
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())

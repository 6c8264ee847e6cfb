"""
Allow running the command-line interface with ``python -m fvsggm``.
"""
import sys

from fvsggm.cli.main import main

if __name__ == "__main__":
    sys.exit(main())

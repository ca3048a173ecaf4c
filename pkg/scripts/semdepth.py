"""
Run the semdepth command-line interface.

Usage:
    python scripts/semdepth.py <command> [options]
    python scripts/semdepth.py selftest
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.main import main

if __name__ == "__main__":
    sys.exit(main())

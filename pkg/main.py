#!/usr/bin/env python3
"""
FD-MIMO Elevation Beamforming Simulator - Main Entry Point

    python main.py multi-user --config configs/multi_user.toml --out mu.csv
    python main.py serve
"""

import sys
import os

# Add app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())

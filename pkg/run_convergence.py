# run_convergence.py - command-line entry point for convergence sweeps
"""
Example:
    python run_convergence.py --dim 2 --problem example1 --coupling h2 --H 8,16,32 --norm h1 --threads 8
"""
import sys

from src.experiments.cli import main

if __name__ == "__main__":
    sys.exit(main())

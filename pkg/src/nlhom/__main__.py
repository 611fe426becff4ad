"""Entry point for: python -m src.nlhom"""
import sys

from .runner import main

if __name__ == "__main__":
    sys.exit(main())

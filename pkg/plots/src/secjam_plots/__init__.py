"""Publication-style figures for secjam sweep CSVs.

Consumes only the documented merged-CSV schema; renders per-algorithm
learning curves with seed bands and the secrecy-rate versus secure-energy-
efficiency scatter with least-squares trend lines.
"""

__version__ = "0.1.0"

"""Transient quantum Otto engine simulator.

Spin-1/2 working substance driven between two field configurations, coupled
during the heating stroke to a population-inverted two-level environment.
The package computes time-local dissipation rates, propagates the truncated
cycle, and extracts efficiency and memory-effect figures.
"""

__version__ = "0.1.0"

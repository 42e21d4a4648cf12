"""Irreversibility measures for open quantum systems.

Two-time measurement entropy production and its characteristic function
for finite-dimensional unital dynamics, and Wigner-entropy production
rates for a thermally damped bosonic mode.
"""

__version__ = "0.1.0"

"""Exact-arithmetic toolkit for two continuous-time guessing games.

Measures, probabilities, and times are Fractions throughout; floats enter
only through the discounted exponential integrals.
"""

__version__ = "0.1.0"

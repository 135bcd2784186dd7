"""Desk-scale laboratory for the distributional implicit hidden partition game.

Exact Fourier analysis on the boolean cube, random matchings, the sequential
blackboard game and its protocols, the MAX-CUT reduction, and a log-domain
audit of the analytic inequalities.
"""

__version__ = "0.1.0"

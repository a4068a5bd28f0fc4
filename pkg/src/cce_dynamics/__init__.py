"""Optimistic no-regret dynamics in bimatrix games.

Simulates optimistic mirror descent for both players of a normal-form or
sequence-form game, checks the trajectory against the regret and stability
inequalities OMD is known to satisfy, and measures convergence to Nash versus
(strong) coarse correlated equilibria.
"""

__version__ = "0.1.0"

"""

eigtrack
========

Eigenstate tracking for open quantum systems: adiabatic-frame
superoperators, projected time-convolutionless propagation, exact
oracles, and the control protocols that enforce transitionless
evolution.

"""

__version__ = '0.1.0'

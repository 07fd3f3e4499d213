"""Random Schroedinger operators with potentials monotone in the randomness.

Monte Carlo integrated density of states, Sturm-bisection eigensolvers for
Neumann finite-difference Hamiltonians, and executable Thirring / Temple /
large-deviation bounds for the Lifshitz tail of the characteristic breather.
"""

__version__ = "0.1.0"

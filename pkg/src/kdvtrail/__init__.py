"""Trailing-edge asymptotics for the small-dispersion KdV equation.

Modules: ``numerics`` (quadrature, roots, Newton), ``special`` (elliptic
integrals, dn, theta), ``initial_data`` (profiles and the catastrophe),
``modulation`` (Whitham curve and edges), ``asymptotics`` (phase functions
and the trailing-edge expansions), ``spectral`` (direct solver), ``cli``.
"""

__version__ = "0.1.0"

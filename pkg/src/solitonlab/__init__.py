"""Numerical laboratory for gradient Ricci solitons with harmonic Weyl tensor.

Multiply warped products over a line, a Taylor-jet curvature oracle, the soliton
ODE and the spectral identities that bound the number of distinct Ricci
eigenvalues.
"""

from __future__ import annotations

__version__ = "0.1.0"

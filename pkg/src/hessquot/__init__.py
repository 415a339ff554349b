"""Explicit sub/supersolutions and exterior barriers for Hessian quotient equations.

Modules
-------
symfun
    Elementary symmetric functions, cones and the quotient invariants of A.
gsym
    Hessian invariants of u(x) = w(x^T A x / 2).
construct
    Subsolution and supersolution profile families and their constants.
barrier
    Local barriers on an ellipsoidal boundary and the spliced subsolution.
viscosity
    Grid-level viscosity certificates and the comparison check.
radial
    Finite-difference solver for the radial exterior problem.
"""

from .symfun import QuotientIndices, SpdDiagonal, Spectrum

__all__ = ["QuotientIndices", "SpdDiagonal", "Spectrum"]
__version__ = "0.1.0"

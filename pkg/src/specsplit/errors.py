"""Exception and warning types shared across the toolkit.

The CLI maps these onto its exit-code contract: operator/usage problems
exit 1, spectral preconditions exit 2, numerical non-convergence exit 3.
"""

from __future__ import annotations


class OperatorError(Exception):
    """Raised for invalid operator construction: unknown family names,
    parameters out of range, malformed descriptors, dimension mismatches."""


class NearSpectrumError(Exception):
    """Raised when a spectral precondition fails: a requested point (or a
    whole contour) is too close to the spectrum, or the spectral gap to the
    imaginary axis vanishes.

    Carries the offending eigenvalue and its distance to the requested point.
    """

    def __init__(self, msg, eigenvalue=None, distance=None, tol=None):
        super().__init__(msg)
        self.eigenvalue = eigenvalue
        self.distance = distance
        self.tol = tol


class QuadratureError(Exception):
    """Raised when a contour integral cannot be computed to the requested
    tolerance: node escalation exhausted, or no resolvent decay where the
    integrand needs it."""


class TruncationError(QuadratureError):
    """Raised when the certified tail bound exceeds the tolerance budget;
    the fix is a larger truncation height ("increase T")."""


class SplittingMismatchError(Exception):
    """Raised when the ranks of the quadrature projections are inconsistent
    with the eigenvalue counts per half-plane."""


class SlowDecayWarning(UserWarning):
    """Emitted when the fitted resolvent decay exponent on the integration
    line is too small for the 1/lambda-weighted integral to be trustworthy."""

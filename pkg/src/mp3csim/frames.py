"""Reference-frame transforms for three-phase quantities.

Space vectors are plain complex numbers (alpha + j*beta); three-phase sets
are (a, b, c) tuples of instantaneous values.  The Clarke transform is
amplitude invariant, so a balanced set of cosines with peak X maps onto the
vector X*exp(j*theta).
"""

from __future__ import annotations

import cmath
import math

__all__ = [
    "DELTA_ROTATION",
    "clarke",
    "inverse_clarke",
    "to_dq",
    "from_dq",
    "delta_rotate",
    "delta_unrotate",
    "sum_diff",
    "from_sum_diff",
]

_A = cmath.exp(2j * math.pi / 3)  # 120 degree rotator
_TWO_THIRDS = 2.0 / 3.0

# A delta winding on the converter side shifts its quantities 30 degrees
# clockwise with respect to the star-connected line side.
DELTA_ROTATION = cmath.exp(-1j * math.pi / 6)


def clarke(a: float, b: float, c: float) -> complex:
    """Amplitude-invariant Clarke transform of a three-phase set."""
    return _TWO_THIRDS * (a + _A * b + _A * _A * c)


def inverse_clarke(x: complex) -> tuple[float, float, float]:
    """Phase values of a space vector (zero sequence free)."""
    return x.real, (x * _A.conjugate()).real, (x * _A).real


def to_dq(x: complex, phi: float) -> complex:
    """Rotate a stationary-frame vector into a frame at angle phi."""
    return x * cmath.exp(-1j * phi)


def from_dq(x: complex, phi: float) -> complex:
    """Rotate a rotating-frame vector back to the stationary frame."""
    return x * cmath.exp(1j * phi)


def delta_rotate(x: complex) -> complex:
    """Map a delta-side converter vector into the line frame."""
    return x * DELTA_ROTATION


def delta_unrotate(x: complex) -> complex:
    """Map a line-frame vector into the delta-side converter frame."""
    return x * DELTA_ROTATION.conjugate()


def sum_diff(x1: complex, x2: complex) -> tuple[complex, complex]:
    """Sum and difference channels of the two line vectors."""
    return x1 + x2, x1 - x2


def from_sum_diff(s: complex, d: complex) -> tuple[complex, complex]:
    """Per-line vectors recovered from the sum and difference channels."""
    return 0.5 * (s + d), 0.5 * (s - d)

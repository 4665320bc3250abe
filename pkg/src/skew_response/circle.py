"""Arithmetic on the circle R/Z.

Circle points are plain floats in [0, 1); arrays of points are plain numpy
arrays.  Everything here works elementwise on both.
"""

import numpy as np


def wrap(x):
    """Reduce a real number (or array) mod 1 into [0, 1)."""
    return x % 1.0


def circle_distance(x, y):
    """Distance on R/Z: min(|x - y| mod 1, 1 - |x - y| mod 1)."""
    d = np.abs(np.asarray(x, dtype=float) - y) % 1.0
    out = np.minimum(d, 1.0 - d)
    if np.ndim(out) == 0:
        return float(out)
    return out

"""Angle arithmetic in degrees on the circle (-180, 180].

All public functions accept scalars or arrays and keep angles in degrees;
radians appear only inside the trigonometric kernels.
"""

from __future__ import annotations

import numpy as np


def wrap_degrees(angle):
    """Wrap an angle (or array of angles) into (-180, 180].

    -180 maps to +180 so the interval is half-open on the left.
    """
    return 180.0 - np.mod(180.0 - np.asarray(angle, dtype=float), 360.0)


def signed_delta(a, b):
    """Wrap-aware signed difference a - b, in (-180, 180] degrees."""
    return wrap_degrees(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def circular_mean_deg(angles_deg) -> float:
    """Circular mean of angles in degrees via the two-argument arc-tangent.

    Sums the unit vectors of the angles and returns atan2(sum sin, sum cos),
    wrapped into (-180, 180].
    """
    a = np.radians(np.asarray(angles_deg, dtype=float))
    if a.size == 0:
        raise ValueError("circular mean of an empty set is undefined")
    s = np.sin(a).sum()
    c = np.cos(a).sum()
    return float(wrap_degrees(np.degrees(np.arctan2(s, c))))

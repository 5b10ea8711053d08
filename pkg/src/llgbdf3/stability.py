"""Linear stability of the BDF3 step for the gyromagnetic-plus-damping operator.

Freezing the coefficient at a unit vector, a Laplacian mode with eigenvalue
``-lam`` evolves perpendicular to it with rate ``lam * (-alpha +/- i)``. For
small damping that ray lies outside the stability sector of BDF3, so a band
of ``k * lam`` values is amplified every step. Long runs need every mode of
the grid below that band.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Grid, laplacian_eigenvalues

_BDF3 = (11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0)
_SCAN = np.logspace(-3, 3, 1201)


def amplification(z: complex) -> float:
    """Largest root modulus of the BDF3 recurrence for ``y' = (z / k) y``."""
    return float(np.max(np.abs(np.roots([_BDF3[0] - z, *_BDF3[1:]]))))


def unstable_band(alpha: float, slack: float = 1e-12):
    """Range ``(lo, hi)`` of ``s = k * lam`` with growth, or ``None`` if there is none."""
    direction = complex(-alpha, 1.0)
    growing = np.array([amplification(s * direction) > 1.0 + slack for s in _SCAN])
    if not growing.any():
        return None
    idx = np.flatnonzero(growing)

    def edge(a, b):
        # a is on the stable side
        for _ in range(60):
            mid = math.sqrt(a * b)
            if (amplification(mid * direction) > 1.0 + slack) == (
                    amplification(b * direction) > 1.0 + slack):
                b = mid
            else:
                a = mid
        return b

    lo = edge(_SCAN[idx[0] - 1], _SCAN[idx[0]]) if idx[0] > 0 else _SCAN[0]
    hi = edge(_SCAN[idx[-1] + 1], _SCAN[idx[-1]]) if idx[-1] + 1 < _SCAN.size else math.inf
    return lo, hi


def max_stable_step(grid: Grid, alpha: float) -> float:
    """Largest ``k`` keeping every grid mode below the unstable band (``inf`` if none)."""
    band = unstable_band(alpha)
    if band is None:
        return math.inf
    lam_max = grid.dim * float(np.max(np.abs(laplacian_eigenvalues(grid))))
    return band[0] / lam_max

"""Randomised dense check that the per-step linear system is invertible."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLarge
from .grid import Grid
from .krylov import assemble_dense
from .scheme import SchemeParams, step_operator

PROBE_LIMITS = {1: 64, 3: 4}


@dataclass
class ProbeReport:
    dim: int
    n: int
    k: float
    alpha: float
    trials: int
    sigma_min: np.ndarray  # smallest singular value per trial

    @property
    def min_sigma(self) -> float:
        return float(self.sigma_min.min())

    @property
    def all_positive(self) -> bool:
        return bool(np.all(self.sigma_min > 0))


def random_coefficient(grid: Grid, rng: np.random.Generator, max_length: float = 2.0):
    """Random per-cell vectors with lengths uniform in ``[0, max_length]``."""
    v = rng.standard_normal(grid.shape + (3,))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return v * rng.uniform(0.0, max_length, size=grid.shape + (1,))


def solvability_probe(grid: Grid, k: float, alpha: float, trials: int = 100,
                      seed: int = 0) -> ProbeReport:
    """Smallest singular value of the assembled step operator over random ``m_hat``.

    Lengths up to 2 cover the overshoot the extrapolated coefficient can
    show. A strictly positive minimum means every sampled system had a
    unique solution.
    """
    if grid.n > PROBE_LIMITS[grid.dim]:
        raise DimensionTooLarge(
            f"probe restricted to n <= {PROBE_LIMITS[grid.dim]} in {grid.dim}D, got n = {grid.n}")
    rng = np.random.default_rng(seed)
    params = SchemeParams(alpha=alpha, k=k, precondition=False)
    sig = np.empty(trials)
    for i in range(trials):
        m_hat = random_coefficient(grid, rng)
        a = assemble_dense(step_operator(m_hat, grid, params))
        sig[i] = np.linalg.svd(a, compute_uv=False)[-1]
    return ProbeReport(grid.dim, grid.n, k, alpha, trials, sig)

"""Semi-implicit BDF3 time stepping with a projection onto the unit sphere.

One step advances the intermediate field by solving the linear system::

    (11/(6k)) u + m_hat x Lap4 u - alpha Lap4 u
        = (3 mt[n+2] - 3/2 mt[n+1] + 1/3 mt[n]) / k + alpha |grad4 m_hat|^2 m_hat + f

with ``m_hat = 3 m[n+2] - 3 m[n+1] + m[n]`` extrapolated from the projected
levels, then normalises ``u`` pointwise to obtain ``m[n+3]``. The BDF
history is carried in the unprojected (intermediate) levels ``mt``.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft

from .errors import DegenerateMagnitude, LLGError, SolverDiverged
from .grid import Grid, cross, extend_neumann, grad_norm_sq, laplacian4, laplacian_eigenvalues
from .krylov import LinearOperator, SolveStats, solve

log = logging.getLogger(__name__)

BDF3_LEAD = 11.0 / 6.0
EPS_MIN = 1e-8


@dataclass(frozen=True)
class SchemeParams:
    alpha: float
    k: float
    solver_tol: float = 1e-12
    solver_maxit: int = 500
    forcing: Optional[Callable] = None
    precondition: bool = True
    eps_min: float = EPS_MIN

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not 0 < self.solver_tol < 1:
            raise ValueError(f"solver_tol must lie in (0, 1), got {self.solver_tol}")


@dataclass(frozen=True)
class SchemeState:
    """Three projected and three intermediate levels, oldest first."""

    grid: Grid
    m_hist: tuple
    mt_hist: tuple
    step_index: int = 0
    last_stats: Optional[SolveStats] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.m_hist) != 3 or len(self.mt_hist) != 3:
            raise ValueError("SchemeState needs exactly three levels of each history")
        shape = self.grid.shape + (3,)
        for f in (*self.m_hist, *self.mt_hist):
            if f.shape != shape:
                raise ValueError(f"field shape {f.shape} does not match grid shape {shape}")

    @classmethod
    def from_levels(cls, grid: Grid, levels: Sequence[np.ndarray]) -> "SchemeState":
        """Start from three projected levels; the intermediate history copies them."""
        m = tuple(np.array(f, dtype=float) for f in levels)
        return cls(grid, m, tuple(f.copy() for f in m), 0)

    @property
    def current(self) -> np.ndarray:
        return self.m_hist[-1]


@functools.lru_cache(maxsize=32)
def cell_centers(grid: Grid) -> tuple:
    return grid.mesh()


def extrapolate3(a, b, c):
    """``3a - 3b + c``: third-order extrapolation from levels n+2, n+1, n."""
    return 3.0 * a - 3.0 * b + c


def bdf_history(mt_hist) -> np.ndarray:
    """Explicit part of the BDF3 difference, ``3 u2 - 3/2 u1 + 1/3 u0``."""
    u0, u1, u2 = mt_hist
    return 3.0 * u2 - 1.5 * u1 + (1.0 / 3.0) * u0


def explicit_source(m_hat, grid: Grid, params: SchemeParams, t_new: float) -> np.ndarray:
    """``alpha |grad4 m_hat|^2 m_hat + f(x, t_new)``, the explicit non-BDF terms."""
    gns = grad_norm_sq(extend_neumann(m_hat, grid), grid)
    out = params.alpha * gns[..., None] * m_hat
    if params.forcing is not None:
        out = out + params.forcing(cell_centers(grid), t_new)
    return out


def assemble_rhs(state: SchemeState, params: SchemeParams, t_new: float,
                 m_hat: np.ndarray | None = None) -> np.ndarray:
    if m_hat is None:
        m_hat = extrapolate3(state.m_hist[2], state.m_hist[1], state.m_hist[0])
    return bdf_history(state.mt_hist) / params.k + explicit_source(m_hat, state.grid, params, t_new)


def apply_operator(m_hat, u, grid: Grid, params: SchemeParams):
    """``(11/(6k)) u + m_hat x Lap4 u - alpha Lap4 u`` on interior fields."""
    lap = laplacian4(extend_neumann(u, grid), grid)
    return (BDF3_LEAD / params.k) * u + cross(m_hat, lap) - params.alpha * lap


def _spectrum(grid: Grid) -> np.ndarray:
    lam = laplacian_eigenvalues(grid)
    if grid.dim == 1:
        return lam
    return lam[:, None, None] + lam[None, :, None] + lam[None, None, :]


def mean_field_preconditioner(m_hat, grid: Grid, params: SchemeParams):
    """Exact inverse of the step operator with ``m_hat`` replaced by its mean.

    With a constant coefficient vector ``w`` the operator is diagonalised by
    the orthonormal DCT-II along every axis; on mode ``j`` it reduces to
    ``a I + b [w]x`` with ``a = 11/(6k) - alpha lam_j`` and ``b = lam_j``,
    whose inverse has the closed form
    ``(a^2 I + b^2 w w^T - a b [w]x) / (a (a^2 + b^2 |w|^2))``.
    """
    w = m_hat.reshape(-1, 3).mean(axis=0)
    lam = _spectrum(grid)[..., None]
    a = BDF3_LEAD / params.k - params.alpha * lam
    b = lam
    denom = a * (a * a + b * b * float(w @ w))
    c_id = a * a / denom
    c_ww = b * b / denom
    c_x = -a * b / denom
    axes = tuple(range(grid.dim))
    shape = grid.shape + (3,)

    def apply(v):
        r = scipy.fft.dctn(v.reshape(shape), type=2, norm="ortho", axes=axes)
        out = c_id * r + c_ww * (r @ w)[..., None] * w + c_x * cross(np.broadcast_to(w, r.shape), r)
        return scipy.fft.idctn(out, type=2, norm="ortho", axes=axes).ravel()

    return apply


def step_operator(m_hat, grid: Grid, params: SchemeParams) -> LinearOperator:
    shape = grid.shape + (3,)
    precond = mean_field_preconditioner(m_hat, grid, params) if params.precondition else None
    return LinearOperator(
        dimension=3 * grid.size,
        apply=lambda v: apply_operator(m_hat, v.reshape(shape), grid, params).ravel(),
        precond=precond,
    )


def project(u, eps_min: float = EPS_MIN):
    """Normalise every cell to unit length."""
    norm = np.sqrt(np.einsum("...c,...c->...", u, u))
    nmin = float(norm.min())
    if nmin < eps_min:
        raise DegenerateMagnitude(
            f"intermediate magnetization has |u| = {nmin:.3e} < eps_min = {eps_min:.1e}",
            min_norm=nmin)
    return u / norm[..., None]


def step(state: SchemeState, params: SchemeParams, t_new: float) -> SchemeState:
    """Advance one BDF3 step to ``t_new`` and shift both histories."""
    grid = state.grid
    m0, m1, m2 = state.m_hist
    m_hat = extrapolate3(m2, m1, m0)
    rhs = assemble_rhs(state, params, t_new, m_hat)
    op = step_operator(m_hat, grid, params)
    try:
        sol, stats = solve(op, rhs.ravel(), params.solver_tol, params.solver_maxit,
                           x0=state.mt_hist[2].ravel())
    except SolverDiverged as exc:
        exc.step_index = state.step_index
        raise
    mt_new = sol.reshape(rhs.shape)
    try:
        m_new = project(mt_new, params.eps_min)
    except DegenerateMagnitude as exc:
        exc.step_index = state.step_index
        raise
    return SchemeState(
        grid,
        (m1, m2, m_new),
        (state.mt_hist[1], state.mt_hist[2], mt_new),
        state.step_index + 1,
        stats,
    )


def num_steps(T: float, k: float) -> int:
    """``N_t = T / k``, rejecting ``T`` that is not an integer multiple of ``k``."""
    nt = round(T / k)
    if nt < 3 or abs(nt * k - T) > 1e-9 * max(abs(T), 1.0):
        raise ValueError(f"T = {T} must be an integer multiple (>= 3) of k = {k}")
    return nt


def run(grid: Grid, initial_levels, params: SchemeParams, T: float,
        observer: Callable[[SchemeState, float], None] | None = None) -> SchemeState:
    """Integrate from the three levels at ``t = 0, k, 2k`` up to ``t = T``.

    ``observer(state, t)`` is called after every step with the state whose
    newest level sits at time ``t``.
    """
    nt = num_steps(T, params.k)
    state = SchemeState.from_levels(grid, initial_levels)
    for n in range(nt - 2):
        t_new = (n + 3) * params.k
        try:
            state = step(state, params, t_new)
        except LLGError as exc:
            exc.args = (f"step {n} (t = {t_new:.6g}): {exc.args[0]}",)
            raise
        if observer is not None:
            observer(state, t_new)
    return state

"""Matrix-free BiCGSTAB with a GMRES fallback, plus dense assembly for small-instance checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse.linalg as sla

from .errors import DimensionTooLarge, SolverDiverged

log = logging.getLogger(__name__)

MAX_DENSE_DIM = 4096
# Krylov basis storage for the GMRES fallback, in floats
GMRES_BASIS_BUDGET = 20_000_000
STAGNATION_WINDOW = 100


@dataclass
class LinearOperator:
    """A linear map on flat coordinate vectors of length ``dimension``.

    ``precond`` optionally applies an approximate inverse; it is used as a
    right preconditioner, so the residual the solver monitors is always the
    residual of the original system.
    """

    dimension: int
    apply: Callable[[np.ndarray], np.ndarray]
    precond: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, v):
        return self.apply(v)


@dataclass
class SolveStats:
    iterations: int
    final_relative_residual: float
    converged: bool
    restarts: int = 0
    method: str = "bicgstab"


def _true_relres(op, x, rhs, bnorm):
    return float(np.linalg.norm(rhs - op.apply(x))) / bnorm


def solve(op: LinearOperator, rhs: np.ndarray, tol: float = 1e-12, maxit: int = 500,
          x0: np.ndarray | None = None, max_restarts: int = 5):
    """Solve ``op(x) = rhs`` to relative residual ``tol``.

    Right-preconditioned BiCGSTAB runs first. Convergence is declared only
    after the true residual ``|rhs - A x|`` has been recomputed and found below
    ``tol * |rhs|``; a drifting recurrence restarts from the current iterate.
    If BiCGSTAB breaks down or stagnates, the remaining iteration budget goes
    to restarted GMRES on the same right-preconditioned system. Raises
    :class:`SolverDiverged` once ``maxit`` iterations in total are used up or
    neither method can make progress.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    n = op.dimension
    if rhs.shape != (n,):
        raise ValueError(f"rhs has shape {rhs.shape}, operator dimension is {n}")
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros(n), SolveStats(0, 0.0, True)

    precond = op.precond if op.precond is not None else (lambda v: v)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float, copy=True)
    threshold = tol * bnorm
    r = rhs - op.apply(x) if x0 is not None else rhs.copy()
    rnorm = float(np.linalg.norm(r))
    if rnorm <= threshold:
        return x, SolveStats(0, rnorm / bnorm, True)

    try:
        return _bicgstab(op, precond, rhs, x, r, rnorm, bnorm, tol, maxit, max_restarts)
    except SolverDiverged as exc:
        if exc.stats.iterations >= maxit:
            raise
        log.debug("falling back to GMRES: %s", exc)
        return _gmres(op, precond, rhs, exc.x, bnorm, tol, maxit, exc.stats)


def _bicgstab(op, precond, rhs, x, r, rnorm, bnorm, tol, maxit, max_restarts):
    n = op.dimension
    threshold = tol * bnorm
    it = 0
    restarts = 0
    best = rnorm
    window_best, window_start = rnorm, 0
    x_best = x.copy()
    tiny = np.finfo(float).tiny ** 0.5

    while True:
        r_hat = r.copy()
        rho = alpha = omega = 1.0
        v = np.zeros(n)
        p = np.zeros(n)
        breakdown = None
        while it < maxit:
            it += 1
            rho_new = float(r_hat @ r)
            if abs(rho_new) < tiny * rnorm * rnorm:
                breakdown = "rho"
                break
            beta = (rho_new / rho) * (alpha / omega)
            rho = rho_new
            p = r + beta * (p - omega * v)
            p_hat = precond(p)
            v = op.apply(p_hat)
            denom = float(r_hat @ v)
            if denom == 0.0 or abs(denom) < tiny * rnorm * float(np.linalg.norm(v)):
                breakdown = "r_hat.v"
                break
            alpha = rho / denom
            s = r - alpha * v
            if np.linalg.norm(s) <= threshold:
                x += alpha * p_hat
                break
            s_hat = precond(s)
            t = op.apply(s_hat)
            tt = float(t @ t)
            if tt == 0.0:
                x += alpha * p_hat
                breakdown = "t.t"
                break
            omega = float(t @ s) / tt
            x += alpha * p_hat + omega * s_hat
            r = s - omega * t
            rnorm = float(np.linalg.norm(r))
            log.debug("bicgstab it=%d res=%.3e", it, rnorm / bnorm)
            if rnorm <= threshold:
                break
            if omega == 0.0:
                breakdown = "omega"
                break
            if rnorm < 0.5 * window_best:
                window_best, window_start = rnorm, it
            elif it - window_start >= STAGNATION_WINDOW:
                breakdown = "stagnation"
                break

        r = rhs - op.apply(x)
        rnorm = float(np.linalg.norm(r))
        relres = rnorm / bnorm
        stats = SolveStats(it, relres, relres <= tol, restarts)
        if stats.converged:
            return x, stats
        if it >= maxit:
            raise _diverged(
                f"BiCGSTAB reached maxit={maxit} with relative residual {relres:.3e} > {tol:.1e}",
                stats, x_best if best < rnorm else x)
        if restarts >= max_restarts or (breakdown is not None and rnorm >= best):
            reason = f"breakdown ({breakdown})" if breakdown else "residual drift"
            raise _diverged(
                f"BiCGSTAB {reason} after {it} iterations, relative residual {relres:.3e}",
                stats, x_best if best < rnorm else x)
        if rnorm < best:
            best = rnorm
            x_best = x.copy()
        window_best, window_start = rnorm, it
        restarts += 1
        log.debug("bicgstab restart %d at it=%d (true res %.3e, %s)", restarts, it, relres,
                  breakdown or "residual drift")


def _diverged(message, stats, x):
    exc = SolverDiverged(message, stats=stats)
    exc.x = x
    return exc


def _gmres(op, precond, rhs, x0, bnorm, tol, maxit, prior):
    """Restarted GMRES on ``A P y = rhs - A x0``; the correction is ``P y``."""
    n = op.dimension
    budget = maxit - prior.iterations
    restart = max(1, min(n, budget, GMRES_BASIS_BUDGET // n))
    system = sla.LinearOperator((n, n), matvec=lambda v: op.apply(precond(v)), dtype=float)
    inner = 0

    def count(_):
        nonlocal inner
        inner += 1

    x = x0.copy()
    relres = float(np.linalg.norm(rhs - op.apply(x))) / bnorm
    # repeated passes act as iterative refinement against the true residual
    while inner < budget and relres > tol:
        r = rhs - op.apply(x)
        cycles = -(-(budget - inner) // restart)
        y, _ = sla.gmres(system, r, rtol=tol * bnorm / np.linalg.norm(r), atol=0.0,
                         restart=restart, maxiter=cycles, callback=count,
                         callback_type="pr_norm")
        x_new = x + precond(y)
        new = float(np.linalg.norm(rhs - op.apply(x_new))) / bnorm
        if new >= relres:
            break
        x, relres = x_new, new
    stats = SolveStats(prior.iterations + inner, relres, relres <= tol, prior.restarts, "gmres")
    if not stats.converged:
        raise SolverDiverged(
            f"BiCGSTAB and GMRES fallback stopped after {stats.iterations} iterations, "
            f"relative residual {relres:.3e} > {tol:.1e}", stats=stats)
    return x, stats


def assemble_dense(op: LinearOperator) -> np.ndarray:
    """Dense matrix whose column ``j`` is ``op(e_j)``."""
    n = op.dimension
    if n > MAX_DENSE_DIM:
        raise DimensionTooLarge(f"dimension {n} exceeds the dense assembly guard {MAX_DENSE_DIM}")
    a = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        a[:, j] = op.apply(e)
        e[j] = 0.0
    return a


def identity_operator(n: int, scale: float = 1.0) -> LinearOperator:
    return LinearOperator(n, lambda v: scale * v)

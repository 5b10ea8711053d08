"""Cell-centered grids on the unit interval/cube and fourth-order stencils.

Fields are plain numpy arrays. A vector field on a grid has shape
``grid.shape + (3,)`` (interior cells only) or ``grid.padded_shape + (3,)``
once a ghost layer of width two has been attached by :func:`extend_neumann`.
The stencil routines act on the leading ``grid.dim`` axes and leave any
trailing axes alone, so scalar fields (no trailing axis) work as well.

Flattening a field with ``ravel()`` gives the unknown ordering used by the
linear solver: cells in lexicographic (C) order, the three components
varying fastest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

GHOST_WIDTH = 2


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered mesh of ``n`` cells per axis on ``[0, 1]^dim``."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def ghost_width(self) -> int:
        return GHOST_WIDTH

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return (self.n + 2 * GHOST_WIDTH,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def size(self) -> int:
        """Number of interior cells."""
        return self.n**self.dim

    def centers(self, with_ghosts: bool = False) -> np.ndarray:
        """1D cell-center coordinates ``(i - 1/2) h``, optionally with ghosts."""
        g = GHOST_WIDTH if with_ghosts else 0
        i = np.arange(1 - g, self.n + g + 1)
        return (i - 0.5) * self.h

    def mesh(self, with_ghosts: bool = False) -> tuple[np.ndarray, ...]:
        """Coordinate arrays (``indexing='ij'``), one per axis."""
        c = self.centers(with_ghosts)
        return tuple(np.meshgrid(*([c] * self.dim), indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape + (3,))


def _interior(dim: int, axis: int | None = None, offset: int = 0) -> tuple[slice, ...]:
    """Slice selecting the interior of a padded array, shifted along ``axis``."""
    g = GHOST_WIDTH
    idx = []
    for a in range(dim):
        off = offset if a == axis else 0
        idx.append(slice(g + off, off - g if off < g else None))
    return tuple(idx)


def _slices(dim: int):
    return {
        (axis, off): _interior(dim, axis, off)
        for axis in range(dim)
        for off in (-2, -1, 1, 2)
    }


_SLICE_TABLE = {dim: _slices(dim) for dim in (1, 3)}
_CENTER = {dim: _interior(dim) for dim in (1, 3)}


def extend_neumann(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Attach two ghost cells per face by even reflection across each face.

    With interior indices ``1..n`` the ghosts satisfy ``u[0] = u[1]``,
    ``u[-1] = u[2]`` at the low face and the mirror relations at the high
    face. Axes are reflected one after another, which also fills the edge and
    corner regions of a 3D block.
    """
    d = grid.dim
    g = GHOST_WIDTH
    tail = u.shape[d:]
    out = np.empty(grid.padded_shape + tail, dtype=u.dtype)
    out[_CENTER[d]] = u
    for axis in range(d):
        lead = (slice(None),) * axis
        # low face
        out[lead + (g - 1,)] = out[lead + (g,)]
        out[lead + (g - 2,)] = out[lead + (g + 1,)]
        # high face
        last = g + grid.n - 1
        out[lead + (last + 1,)] = out[lead + (last,)]
        out[lead + (last + 2,)] = out[lead + (last - 1,)]
    return out


def laplacian4(p: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourth-order Laplacian of a ghost-extended field; returns interior values.

    Per axis: ``(-u[i-2] + 16 u[i-1] - 30 u[i] + 16 u[i+1] - u[i+2]) / (12 h^2)``,
    evaluated on differences from ``u[i]`` to keep rounding proportional to
    the local variation rather than to ``|u| / h^2``.
    """
    d = grid.dim
    sl = _SLICE_TABLE[d]
    center = p[_CENTER[d]]
    acc = None
    for axis in range(d):
        near = (p[sl[axis, -1]] - center) + (p[sl[axis, 1]] - center)
        far = (p[sl[axis, -2]] - center) + (p[sl[axis, 2]] - center)
        term = 16.0 * near - far
        acc = term if acc is None else acc + term
    acc *= 1.0 / (12.0 * grid.h**2)
    return acc


def gradient4(p: np.ndarray, grid: Grid) -> tuple[np.ndarray, ...]:
    """Fourth-order central first derivative along each axis (interior values).

    Per axis: ``(u[i-2] - 8 u[i-1] + 8 u[i+1] - u[i+2]) / (12 h)``.
    """
    d = grid.dim
    sl = _SLICE_TABLE[d]
    scale = 1.0 / (12.0 * grid.h)
    out = []
    for axis in range(d):
        diff = 8.0 * (p[sl[axis, 1]] - p[sl[axis, -1]]) + (p[sl[axis, -2]] - p[sl[axis, 2]])
        out.append(diff * scale)
    return tuple(out)


def grad_norm_sq(p: np.ndarray, grid: Grid) -> np.ndarray:
    """Pointwise ``sum_axes sum_components (d_axis u_c)^2`` as a scalar field."""
    total = np.zeros(grid.shape)
    for g_axis in gradient4(p, grid):
        total += np.einsum("...c,...c->...", g_axis, g_axis)
    return total


def cross(a, b):
    """Cross product over the trailing axis (faster than np.cross for small arrays)."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


class Norms(NamedTuple):
    linf: float
    l2: float
    h1: float


def norms(e: np.ndarray, grid: Grid) -> Norms:
    """Discrete L-infinity, L2 and H1 norms of an interior vector field.

    The H1 seminorm part uses :func:`gradient4` on the even-reflected field.
    Reductions go through ``np.sum`` (pairwise, fixed order), so the result
    does not depend on threading.
    """
    vol = grid.cell_volume
    linf = float(np.max(np.abs(e))) if e.size else 0.0
    l2_sq = vol * float(np.sum(e * e))
    semi_sq = 0.0
    for g_axis in gradient4(extend_neumann(e, grid), grid):
        semi_sq += vol * float(np.sum(g_axis * g_axis))
    return Norms(linf, np.sqrt(l2_sq), np.sqrt(l2_sq + semi_sq))


def laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of ``laplacian4`` composed with ``extend_neumann`` in 1D.

    The even-reflection ghosts make the operator a symmetric convolution of
    the half-sample symmetric extension, which the orthonormal DCT-II
    diagonalises; mode ``j`` has frequency ``theta = pi j / n``.
    """
    theta = np.pi * np.arange(grid.n) / grid.n
    return (-2.0 * np.cos(2 * theta) + 32.0 * np.cos(theta) - 30.0) / (12.0 * grid.h**2)

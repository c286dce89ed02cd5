"""
Chebyshev collocation on [-1, 1].

Nodes are the Chebyshev-Gauss-Lobatto points ordered from -1 to 1. All
operators are dense matrices acting on node values, which is cheap at the
resolutions used here (N <= 1024).
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C

__all__ = ["Grid", "build_grid", "interpolate", "c0_norm"]

N_MIN = 8
N_MAX = 1024


def _cheb_nodes(N):
    return -np.cos(np.pi * np.arange(N + 1) / N)


def _diff_matrix(x):
    """First-derivative collocation matrix (negative-sum trick on the diagonal)."""
    N = len(x) - 1
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D


def _clenshaw_curtis(N):
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
        v -= np.cos(N * inner) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
    w[1:-1] = 2.0 * v / N
    # nodes run from -1 to 1, the formula is symmetric so ordering is immaterial
    return w


def _bary_weights(N):
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _bary_matrix(x, nodes, wb):
    """Rows evaluate the interpolant at x; exact copy of node values on nodes."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    M = wb[None, :] / diff
    M /= M.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        M[hit] = exact[hit].astype(float)
    return M


def _filter_profile(N, strength, order=8):
    """Exponential damping of the top third of Chebyshev modes."""
    k = np.arange(N + 1)
    kc = 2 * N // 3
    sigma = np.ones(N + 1)
    top = k > kc
    sigma[top] = np.exp(-strength * ((k[top] - kc) / (N - kc)) ** order)
    return sigma


@dataclass(frozen=True, eq=False)
class Grid:
    """Collocation grid with N + 1 Chebyshev-Gauss-Lobatto nodes.

    Attributes
    ----------
    N : int
        Polynomial degree.
    nodes : ndarray
        Abscissae, increasing, ``nodes[0] == -1`` and ``nodes[-1] == 1``.
    d1, d2 : ndarray
        First and second differentiation matrices.
    weights : ndarray
        Clenshaw-Curtis quadrature weights.
    filter : ndarray or None
        Spectral damping profile over Chebyshev modes, or None when disabled.
    """

    N: int
    nodes: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    filter: np.ndarray = field(default=None, repr=False)
    oversample: int = 8

    @property
    def size(self):
        return self.N + 1

    @cached_property
    def bary_weights(self):
        return _bary_weights(self.N)

    @cached_property
    def fine_nodes(self):
        # CGL points of degree oversample*N contain the original nodes
        return _cheb_nodes(self.oversample * self.N)

    @cached_property
    def fine_matrix(self):
        return _bary_matrix(self.fine_nodes, self.nodes, self.bary_weights)

    @cached_property
    def vandermonde(self):
        return C.chebvander(self.nodes, self.N)

    @cached_property
    def cumint(self):
        """Matrix giving node values of the antiderivative vanishing at x = -1."""
        n = self.N + 1
        coeffs = np.linalg.solve(self.vandermonde, np.eye(n))
        integ = C.chebint(coeffs, lbnd=-1.0, axis=0)
        return C.chebvander(self.nodes, self.N + 1) @ integ

    @cached_property
    def filter_matrix(self):
        if self.filter is None:
            return None
        V = self.vandermonde
        return V @ np.diag(self.filter) @ np.linalg.inv(V)

    def integrate(self, f):
        """Quadrature of node values over [-1, 1]."""
        return np.dot(self.weights, f)

    def apply_filter(self, f):
        F = self.filter_matrix
        return f if F is None else F @ f


def build_grid(N, filter_strength=None):
    """Build a Chebyshev grid of degree ``N``.

    ``filter_strength`` enables an exponential filter on the top third of the
    spectrum (36.0 damps the last mode to machine precision).
    """
    if int(N) != N or not N_MIN <= N <= N_MAX:
        raise ValueError(f"N must be an integer in [{N_MIN}, {N_MAX}], got {N}")
    N = int(N)
    x = _cheb_nodes(N)
    x[0], x[-1] = -1.0, 1.0
    if N % 2 == 0:
        x[N // 2] = 0.0
    d1 = _diff_matrix(x)
    d2 = d1 @ d1
    w = _clenshaw_curtis(N)
    filt = None if filter_strength is None else _filter_profile(N, filter_strength)
    return Grid(N=N, nodes=x, d1=d1, d2=d2, weights=w, filter=filt)


def interpolate(grid, field, x):
    """Barycentric evaluation of the degree-N interpolant of ``field`` at ``x``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < -1.0) or np.any(xa > 1.0):
        raise ValueError("interpolation abscissa outside [-1, 1]")
    vals = _bary_matrix(xa.ravel(), grid.nodes, grid.bary_weights) @ np.asarray(field)
    return vals.reshape(xa.shape) if xa.ndim else float(vals[0])


def c0_norm(grid, field):
    """Sup norm of the interpolant over the oversampled mesh."""
    return float(np.max(np.abs(grid.fine_matrix @ np.asarray(field))))

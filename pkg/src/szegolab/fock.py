"""Truncated weighted Bargmann space.

The space consists of functions f(z) e^{-k|z|^2/2} with f a polynomial of
total degree at most M on C^N.  The monomial basis is orthogonal for the
L^2(C^N, dL) inner product; everything here is evaluated through
log-magnitude + phase so that large k and large degrees never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "FockTruncation",
    "basis_norm",
    "log_basis_norm",
    "eval_basis",
    "eval_basis_matrix",
    "reproducing_kernel",
    "coherent_state_coeffs",
]


def _graded_lex_indices(ambient_dim: int, max_degree: int) -> list[tuple[int, ...]]:
    """All multi-indices with |n| <= max_degree, graded then lexicographic."""
    out: list[tuple[int, ...]] = []

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for degree in range(max_degree + 1):
        block = sorted(compositions(degree, ambient_dim), reverse=True)
        out.extend(block)
    return out


@dataclass(frozen=True)
class FockTruncation:
    """Truncation parameters: ambient dimension N, weight k, max degree M."""

    ambient_dim: int
    k: float
    max_degree: int

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be a positive integer")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.max_degree < 0:
            raise ValueError("max_degree must be non-negative")

    @cached_property
    def basis(self) -> tuple[tuple[int, ...], ...]:
        return tuple(_graded_lex_indices(self.ambient_dim, self.max_degree))

    @cached_property
    def _index_map(self) -> dict[tuple[int, ...], int]:
        return {n: i for i, n in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index_of(self, n) -> int:
        return self._index_map[tuple(n)]

    @cached_property
    def exponent_matrix(self) -> np.ndarray:
        """(dim, N) integer array of basis exponents, graded-lex order."""
        return np.array(self.basis, dtype=np.int64)

    @cached_property
    def log_norms(self) -> np.ndarray:
        """log of ||z^n e^{-k|z|^2/2}|| for every basis element."""
        E = self.exponent_matrix
        N = self.ambient_dim
        lg = np.vectorize(math.lgamma)(E + 1.0).sum(axis=1)
        total = E.sum(axis=1)
        return 0.5 * (N * math.log(math.pi) + lg - (total + N) * math.log(self.k))


def log_basis_norm(trunc: FockTruncation, n) -> float:
    """log of the L^2 norm of the unnormalized monomial z^n e^{-k|z|^2/2}."""
    n = tuple(n)
    total = sum(n)
    lg = sum(math.lgamma(nj + 1) for nj in n)
    N = trunc.ambient_dim
    return 0.5 * (N * math.log(math.pi) + lg - (total + N) * math.log(trunc.k))


def basis_norm(trunc: FockTruncation, n) -> float:
    """||z^n e^{-k|z|^2/2}|| = sqrt(pi^N n! / k^(|n|+N))."""
    if tuple(n) not in trunc._index_map:
        raise ValueError(f"multi-index {n} not in truncated basis")
    return math.exp(log_basis_norm(trunc, n))


def _as_points(z, ambient_dim: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(z, dtype=complex))
    if pts.shape[1] != ambient_dim:
        raise ValueError(f"points must have {ambient_dim} complex coordinates")
    return pts


def eval_basis_matrix(trunc: FockTruncation, points) -> np.ndarray:
    """Values of all normalized basis elements at points.

    points: (m, N) complex.  Returns (m, dim) complex.  Computed as
    exp(sum n_j log|z_j| - k|z|^2/2 - log_norm) times the monomial phase.
    """
    pts = _as_points(points, trunc.ambient_dim)
    E = trunc.exponent_matrix  # (dim, N)
    zero = pts == 0
    logabs = np.where(zero, 0.0, np.log(np.abs(np.where(zero, 1.0, pts))))
    phase = np.where(zero, 0.0, np.angle(pts))
    r2 = np.abs(pts) ** 2
    logmag = logabs @ E.T.astype(float)
    logmag -= 0.5 * trunc.k * r2.sum(axis=1)[:, None]
    logmag -= trunc.log_norms[None, :]
    vals = np.exp(logmag + 1j * (phase @ E.T.astype(float)))
    if zero.any():
        # monomials with positive exponent on a vanishing coordinate are zero
        kill = (zero.astype(np.int64) @ (E.T > 0).astype(np.int64)) > 0
        vals[kill] = 0.0
    return vals


def eval_basis(trunc: FockTruncation, n, z) -> complex:
    """Normalized basis element z^n e^{-k|z|^2/2} / norm evaluated at z."""
    idx = trunc.index_of(n)
    pts = _as_points(z, trunc.ambient_dim)
    return complex(eval_basis_matrix(trunc, pts)[0, idx])


def reproducing_kernel(trunc: FockTruncation, z, w) -> complex:
    """Kernel (k/pi)^N e^{k z.conj(w)} e^{-k|z|^2/2} e^{-k|w|^2/2}.

    The real part of the exponent is computed as -k|z-w|^2/2 in log form, so
    the value never overflows for large k|z||w|.
    """
    k, N = trunc.k, trunc.ambient_dim
    zv = np.asarray(z, dtype=complex).reshape(-1)
    wv = np.asarray(w, dtype=complex).reshape(-1)
    if zv.size != N or wv.size != N:
        raise ValueError("points must have N complex coordinates")
    inner = np.sum(zv * wv.conj())
    log_mag = N * math.log(k / math.pi) - 0.5 * k * float(
        np.sum(np.abs(zv - wv) ** 2)
    )
    return math.exp(log_mag) * np.exp(1j * k * inner.imag)


def coherent_state_coeffs(trunc: FockTruncation, w) -> np.ndarray:
    """Expansion coefficients of the coherent state e_w in the normalized basis.

    Since Pi_k(z, conj(w)) = sum_n u_n(z) conj(u_n(w)), the coefficient on
    u_n is conj(u_n(w)).
    """
    pts = _as_points(w, trunc.ambient_dim)
    return eval_basis_matrix(trunc, pts)[0].conj()

"""Finite-difference Dirichlet eigenvalues of planar convex polygons.

Five-point Laplacian on the interior grid nodes; neighbours outside the
polygon are dropped, which imposes ``u = 0`` there. The smallest eigenvalues
come from a block Lanczos iteration on ``A^{-1}`` (shift-invert at zero) whose
inner solves are conjugate gradient runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .box_spectrum import FINITE_DIFFERENCE, Spectrum
from .geometry import ConvexPolygon, GridMask, rasterize

NODE_BUDGET = 200_000
MAX_EIGENVALUES = 50
CG_RTOL = 1e-12
START_SEED = 20240611
DEFAULT_RTOL = 1e-9


class MeshTooCoarseError(ValueError):
    pass


class NodeBudgetError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals: Optional[np.ndarray] = None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True, eq=False)
class DiscreteLaplacian:
    mask: GridMask
    matrix: sp.csr_matrix
    domain_id: str = ""

    @property
    def h(self) -> float:
        return self.mask.h

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def node_index(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): row for row, (i, j) in enumerate(self.mask.indices)}


def assemble(poly: ConvexPolygon, h: float) -> DiscreteLaplacian:
    mask = rasterize(poly, h)
    N = len(mask)
    if N == 0:
        raise MeshTooCoarseError(f"mesh width {h} leaves no interior node")
    if N > NODE_BUDGET:
        raise NodeBudgetError(f"{N} interior nodes exceed the budget of {NODE_BUDGET}")
    idx = mask.indices
    lo = idx.min(axis=0) - 1
    span = idx.max(axis=0) - lo + 2
    keys = (idx[:, 0] - lo[0]) * span[1] + (idx[:, 1] - lo[1])
    order = np.argsort(keys)
    sorted_keys = keys[order]
    rows, cols = [], []
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb = keys + di * span[1] + dj
        pos = np.searchsorted(sorted_keys, nb)
        pos = np.minimum(pos, N - 1)
        hit = sorted_keys[pos] == nb
        rows.append(np.flatnonzero(hit))
        cols.append(order[pos[hit]])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    inv_h2 = 1.0 / (h * h)
    off = sp.coo_matrix((np.full(rows.size, -inv_h2), (rows, cols)), shape=(N, N))
    mat = (sp.identity(N, format="csr") * (4.0 * inv_h2) + off).tocsr()
    mat.sort_indices()
    return DiscreteLaplacian(mask, mat, poly.domain_id)


def conjugate_gradient(A: sp.spmatrix, B: np.ndarray, rtol: float = CG_RTOL, maxiter: Optional[int] = None) -> np.ndarray:
    """Solve ``A X = B`` column by column (vectorised across columns) for SPD ``A``.

    Each column stops updating once its residual drops below ``rtol * |b|``.
    """
    B = np.atleast_2d(B.T).T
    N, p = B.shape
    maxiter = maxiter or 10 * N + 100
    X = np.zeros_like(B)
    R = B.copy()
    P = R.copy()
    tmp = np.empty_like(B)
    rs = np.einsum("ij,ij->j", R, R)
    target = (rtol**2) * rs
    active = rs > target
    for _ in range(maxiter):
        if not active.any():
            return X
        AP = A @ P
        pap = np.einsum("ij,ij->j", P, AP)
        alpha = np.zeros(p)
        np.divide(rs, pap, out=alpha, where=active)
        np.multiply(P, alpha, out=tmp)
        X += tmp
        np.multiply(AP, alpha, out=tmp)
        R -= tmp
        rs_new = np.einsum("ij,ij->j", R, R)
        beta = np.zeros(p)
        np.divide(rs_new, rs, out=beta, where=active)
        P *= beta
        P += R
        rs = np.where(active, rs_new, rs)
        active &= rs > target
    raise ConvergenceError(f"CG did not converge in {maxiter} iterations", np.sqrt(rs))


def _orthonormalize(W: np.ndarray, basis: Optional[np.ndarray], drop_rtol: float) -> np.ndarray:
    """Orthogonalise ``W`` against ``basis`` twice, then return an orthonormal basis of what remains.

    Directions whose surviving norm is below ``drop_rtol * |W|`` are dropped.
    """
    ref = float(np.linalg.norm(W, axis=0).max()) if W.size else 0.0
    for _ in range(2):
        if basis is not None and basis.shape[1]:
            W = W - basis @ (basis.T @ W)
    U, s, _ = np.linalg.svd(W, full_matrices=False)
    return U[:, s > drop_rtol * ref]


def smallest_eigenvalues(L: DiscreteLaplacian, k: int, rel_tol: float = DEFAULT_RTOL, block: Optional[int] = None, max_dim: int = 1200) -> Spectrum:
    """The ``k`` smallest eigenvalues of ``L`` by block shift-invert Lanczos.

    The Krylov basis for ``A^{-1}`` is kept fully orthogonal and a
    Rayleigh-Ritz step runs after every block; a Ritz value ``theta`` counts
    as converged once ``|A^{-1} y - theta y| <= rel_tol * theta``. The start
    block comes from a fixed-seed generator, so repeated runs agree bitwise.
    """
    N = L.size
    if not 1 <= k <= min(MAX_EIGENVALUES, N):
        raise ValueError(f"k must be in [1, min({MAX_EIGENVALUES}, {N})], got {k}")
    if rel_tol < 1e-10:
        raise ValueError("rel_tol below 1e-10 is not supported")
    A = L.matrix
    p = min(N, block or max(4, k))
    rng = np.random.default_rng(START_SEED)
    V = _orthonormalize(rng.standard_normal((N, p)), None, 0.0)
    basis = np.empty((N, 0))
    images = np.empty((N, 0))
    drop = 1e-9
    residuals = None
    while True:
        W = conjugate_gradient(A, V)
        basis = np.hstack([basis, V])
        images = np.hstack([images, W])
        H = basis.T @ images
        H = 0.5 * (H + H.T)
        theta, Y = np.linalg.eigh(H)
        theta, Y = theta[::-1], Y[:, ::-1]
        m = min(k, theta.size)
        Ritz = basis @ Y[:, :m]
        R = images @ Y[:, :m] - Ritz * theta[:m]
        residuals = np.linalg.norm(R, axis=0) / theta[:m]
        nxt = _orthonormalize(W, basis, drop)
        exhausted = nxt.shape[1] == 0
        if m == k and np.all(residuals <= rel_tol):
            break
        if exhausted:
            if theta.size < k:
                raise ConvergenceError(f"invariant subspace of dimension {theta.size} < k={k}", residuals)
            break
        if basis.shape[1] + nxt.shape[1] > max_dim:
            raise ConvergenceError(f"Krylov basis reached {basis.shape[1]} vectors without converging", residuals)
        V = nxt
    values = np.sort(1.0 / theta[:k])
    return Spectrum(values, source=FINITE_DIFFERENCE, mesh_width=L.h, domain_id=L.domain_id)


def fd_spectrum(poly: ConvexPolygon, h: float, k: int, rel_tol: float = DEFAULT_RTOL) -> Spectrum:
    return smallest_eigenvalues(assemble(poly, h), k, rel_tol)


def _order_from_triple(l1: np.ndarray, l2: np.ndarray, l3: np.ndarray, ratio: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (l1 - l2) / (l2 - l3)
        p = np.log(q) / math.log(ratio)
    # noisy boundary error: fall back to first order when the fit is meaningless
    bad = ~np.isfinite(p) | (p < 0.5) | (p > 4.0)
    return np.where(bad, 1.0, p)


def richardson_estimate(poly: ConvexPolygon, k: int, h_sequence: Sequence[float], rel_tol: float = DEFAULT_RTOL, default_order: float = 2.0) -> Spectrum:
    """Extrapolate ``lambda(h) = lambda + c h^p`` to ``h -> 0``.

    ``p`` is fitted per eigenvalue from the three finest meshes (the finest
    pair of differences) and falls back to 1 when that fit is not in
    ``[0.5, 4]``; with only two meshes ``default_order`` is assumed. The
    error bar is ``|extrapolated - finest|``.
    """
    hs = sorted((float(h) for h in h_sequence), reverse=True)
    if len(hs) < 2:
        raise ValueError("Richardson extrapolation needs at least two mesh widths")
    spectra = [fd_spectrum(poly, h, k, rel_tol).values for h in hs]
    finest = spectra[-1]
    ratio = hs[-2] / hs[-1]
    if len(hs) >= 3 and abs(hs[-3] / hs[-2] - ratio) <= 1e-9 * ratio:
        p = _order_from_triple(spectra[-3], spectra[-2], finest, ratio)
    elif len(hs) >= 3:
        p = np.full(k, 1.0)
    else:
        p = np.full(k, float(default_order))
    extrap = finest + (finest - spectra[-2]) / (ratio**p - 1.0)
    err = np.abs(extrap - finest)
    # extrapolation can reorder near-degenerate pairs; keep values ascending
    order = np.argsort(extrap, kind="stable")
    return Spectrum(extrap[order], source=FINITE_DIFFERENCE, mesh_width=hs[-1], domain_id=poly.domain_id, errors=err[order])

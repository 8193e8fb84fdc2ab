"""Smallest eigenpairs of sparse symmetric matrices by Lanczos iteration.

The target matrices are normalized graph Laplacians, whose spectra lie in
[0, 2]. The iteration therefore runs on B = 2I - A and fetches the largest
pairs of B, mapping back with lambda = 2 - mu; that way the wanted end of
the spectrum is the dominant one and no factorization is needed.

Repeated eigenvalues are handled through breakdown restarts: when the
Krylov space exhausts an invariant subspace, the iteration continues from
a fresh orthogonal vector. One known limit of any single-vector Lanczos:
a matrix with exactly identical disconnected blocks can converge to a
valid invariant subspace that is not the minimal one, since the duplicate
direction is unreachable until exhaustion. Graphs built from real images
never have exactly mirrored components, and the pipelines route small or
near-full problems to the dense path anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import ArgumentError, ConvergenceError

DENSE_CUTOFF = 64


@dataclass
class EigenResult:
    values: np.ndarray     # k ascending eigenvalues
    vectors: np.ndarray    # (order, k), orthonormal columns
    residuals: np.ndarray  # per-pair ||A v - lambda v||


def _matvec(A):
    if sp.issparse(A):
        return lambda v: 2.0 * v - A @ v
    Ad = np.asarray(A)
    return lambda v: 2.0 * v - Ad @ v


def _residuals(A, vals, vecs):
    if sp.issparse(A):
        R = A @ vecs - vecs * vals[None, :]
    else:
        R = np.asarray(A) @ vecs - vecs * vals[None, :]
    return np.linalg.norm(R, axis=0)


def smallest_k(A, k: int, tol: float = 1e-8, max_iter: int | None = None,
               seed: int = 42) -> EigenResult:
    """k smallest eigenpairs of symmetric A with spectrum in [0, 2].

    Full reorthogonalization (the matrices are small, robustness wins over
    memory), deterministic seeded start vector, restart on breakdown so
    invariant subspaces and eigenvalue multiplicities are handled.
    """
    order = A.shape[0]
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}")
    if k >= order:
        raise ArgumentError(f"k = {k} must be smaller than the matrix order {order}")
    if max_iter is None:
        max_iter = 10 * order

    mv = _matvec(A)
    rng = np.random.default_rng(seed)

    V = np.empty((order, min(order, 256)))
    alphas: list = []
    betas: list = []   # betas[j] couples column j to j+1; 0.0 marks a restart

    def fresh_vector(ncols):
        for _ in range(50):
            v = rng.standard_normal(order)
            if ncols:
                v -= V[:, :ncols] @ (V[:, :ncols].T @ v)
                v -= V[:, :ncols] @ (V[:, :ncols].T @ v)
            nrm = np.linalg.norm(v)
            if nrm > 1e-10:
                return v / nrm
        raise ConvergenceError("could not draw a start vector outside the current subspace")

    def grow(ncols):
        nonlocal V
        if ncols == V.shape[1]:
            V = np.concatenate([V, np.empty((order, min(order - ncols, 256)))], axis=1)

    v = fresh_vector(0)
    V[:, 0] = v
    j = 0          # index of the newest column
    steps = 0
    best = None    # (max residual, vals, vecs, res) of the best Ritz set so far

    while True:
        steps += 1
        w = mv(V[:, j])
        a = float(V[:, j] @ w)
        alphas.append(a)
        # full reorthogonalization, two passes
        w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
        w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
        b = float(np.linalg.norm(w))

        check_now = (j + 1) >= k
        if check_now:
            theta, Y = eigh_tridiagonal(np.array(alphas), np.array(betas))
            sel = np.argsort(theta)[-k:]             # largest Ritz values of B
            bound = abs(b) * np.abs(Y[-1, sel])
            if np.all(bound <= tol) or (j + 1) == order or steps >= max_iter:
                X = V[:, : j + 1] @ Y[:, sel]
                X /= np.linalg.norm(X, axis=0)[None, :]
                lam = 2.0 - theta[sel]
                asc = np.argsort(lam)
                lam, X = lam[asc], X[:, asc]
                res = _residuals(A, lam, X)
                if best is None or res.max() < best[0]:
                    best = (res.max(), lam, X, res)
                if np.all(res <= tol):
                    return EigenResult(lam, X, res)
                if (j + 1) == order:
                    # Krylov space exhausted: nothing more to gain
                    raise ConvergenceError(
                        f"Lanczos stalled at residual {best[0]:.3e} (tol {tol:.1e})",
                        residuals=best[3],
                    )
        if steps >= max_iter:
            raise ConvergenceError(
                f"no convergence within {max_iter} iterations; "
                f"best residual {best[0] if best else float('inf'):.3e}",
                residuals=best[3] if best else None,
            )

        grow(j + 1)
        if b < 1e-12:
            # invariant subspace found: restart with a fresh direction
            V[:, j + 1] = fresh_vector(j + 1)
            betas.append(0.0)
        else:
            V[:, j + 1] = w / b
            betas.append(b)
        j += 1


def smallest_k_dense(A, k: int) -> EigenResult:
    """Dense fallback: exact eigh, valid for any k <= order."""
    order = A.shape[0]
    if k < 1 or k > order:
        raise ArgumentError(f"k = {k} out of range for order {order}")
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)
    vals, vecs = np.linalg.eigh(Ad)
    vals, vecs = vals[:k], vecs[:, :k]
    return EigenResult(vals, vecs, _residuals(A, vals, vecs))


def smallest_k_auto(A, k: int, tol: float = 1e-8, max_iter: int | None = None,
                    seed: int = 42, dense_cutoff: int = DENSE_CUTOFF) -> EigenResult:
    """Route tiny or near-full problems to the dense path, the rest to Lanczos.

    Krylov iteration needs k < order and pays off only once the matrix is
    reasonably large; the pipelines call this so degenerate cases (single
    superpixel, k equal to the order) still work.
    """
    order = A.shape[0]
    if k >= order or order <= dense_cutoff:
        return smallest_k_dense(A, k)
    return smallest_k(A, k, tol=tol, max_iter=max_iter, seed=seed)

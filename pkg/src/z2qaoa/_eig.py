"""Shared matrix-free lowest-eigenpair machinery.

Small dimensions go through dense eigh (exact, full spectrum available);
larger ones through ARPACK's implicitly restarted Lanczos with a seeded
start vector for reproducibility.  Near-degenerate clusters are afterwards
rotated into simultaneous eigenbases of the model's commuting symmetry
operators so that symmetry labels come out as clean +-1.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh


class EigensolverError(RuntimeError):
    """Non-convergence, carrying the best residuals found so far."""

    def __init__(self, message: str, residuals: list[float] | None = None):
        super().__init__(message)
        self.residuals = residuals or []


DENSE_CUTOFF = 2048


def lowest_eigenpairs_matfree(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    *,
    seed: int = 7,
    tol: float = 1e-10,
    maxiter: int = 2000,
    dense_cutoff: int = DENSE_CUTOFF,
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest k eigenpairs of a Hermitian operator given by its matvec.

    Returns (values ascending, column vectors).  Dense fallback below
    ``dense_cutoff`` computes the full spectrum and truncates.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if dim <= dense_cutoff:
        ident = np.eye(dim, dtype=np.complex128)
        dense = np.column_stack([matvec(ident[:, j]) for j in range(dim)])
        vals, vecs = np.linalg.eigh(dense)
        return vals[:k].real, vecs[:, :k]
    if k >= dim - 1:
        raise ValueError(f"k={k} too large for sparse path at dim={dim}")
    op = LinearOperator((dim, dim), matvec=matvec, dtype=np.complex128)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    ncv = min(dim - 1, max(4 * k + 8, 40))
    try:
        vals, vecs = eigsh(
            op, k=k, which="SA", v0=v0, ncv=ncv, tol=tol, maxiter=maxiter
        )
    except ArpackNoConvergence as exc:
        got = exc.eigenvalues
        res = []
        if exc.eigenvectors is not None and exc.eigenvectors.size:
            for j in range(exc.eigenvectors.shape[1]):
                v = exc.eigenvectors[:, j]
                res.append(float(np.linalg.norm(matvec(v) - got[j] * v)))
        raise EigensolverError(
            f"eigensolver did not converge within {maxiter} iterations "
            f"({len(got)} of {k} pairs found)",
            residuals=res,
        ) from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def resolve_degeneracies(
    vals: np.ndarray,
    vecs: np.ndarray,
    sym_apply_fns: list[Callable[[np.ndarray], np.ndarray]],
    *,
    cluster_tol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rotate degenerate eigenspaces into simultaneous symmetry eigenbases.

    ``sym_apply_fns`` apply commuting Hermitian involutions (eigenvalues +-1).
    Within each eigenvalue cluster the vectors are successively rotated to
    diagonalize every operator; the returned ``labels`` carries one column of
    expectation values per operator.  Within a cluster, vectors end up ordered
    by (-label_0, -label_1, ...), i.e. +1 sectors first.
    """
    m = vecs.shape[1]
    labels = np.zeros((m, len(sym_apply_fns)))
    vecs = vecs.copy()
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and abs(vals[stop] - vals[start]) <= cluster_tol * max(1.0, abs(vals[start])):
            stop += 1
        block = vecs[:, start:stop]
        runs = [(0, stop - start)]
        for j, op in enumerate(sym_apply_fns):
            next_runs: list[tuple[int, int]] = []
            for lo, hi in runs:
                sub = block[:, lo:hi]
                opsub = np.column_stack([op(sub[:, c]) for c in range(hi - lo)])
                gram = sub.conj().T @ opsub
                gram = 0.5 * (gram + gram.conj().T)
                w, r = np.linalg.eigh(gram)
                w, r = w[::-1], r[:, ::-1]  # +1 sector first
                block[:, lo:hi] = sub @ r
                labels[start + lo : start + hi, j] = w
                rlo = 0
                for t in range(1, hi - lo + 1):
                    if t == hi - lo or abs(w[t] - w[rlo]) > 1e-6:
                        next_runs.append((lo + rlo, lo + t))
                        rlo = t
            runs = next_runs
        # recompute labels exactly from the rotated vectors
        for idx in range(stop - start):
            v = block[:, idx]
            for j, op in enumerate(sym_apply_fns):
                labels[start + idx, j] = float(np.real(np.vdot(v, op(v))))
        vecs[:, start:stop] = block
        start = stop
    return vals, vecs, labels


def eigen_residuals(
    matvec: Callable[[np.ndarray], np.ndarray], vals: np.ndarray, vecs: np.ndarray
) -> np.ndarray:
    return np.array(
        [
            float(np.linalg.norm(matvec(vecs[:, j]) - vals[j] * vecs[:, j]))
            for j in range(vecs.shape[1])
        ]
    )

"""Jacobi-preconditioned conjugate gradients."""

from __future__ import annotations

import numpy as np

from ..exceptions import NonConvergenceError


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # pairwise reduction: deterministic regardless of BLAS threading
    return float(np.add.reduce(a * b))


def cg_solve(A, b, tol: float = 1e-10, x0=None, max_iter: int | None = None) -> np.ndarray:
    """Solve the SPD system ``A x = b`` to relative residual ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    n = b.size
    b_norm = np.sqrt(_dot(b, b))
    if b_norm == 0.0:
        return np.zeros(n)
    max_iter = 10 * n if max_iter is None else max_iter
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise ValueError("matrix diagonal must be positive")
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = _dot(r, z)
    res = np.sqrt(_dot(r, r)) / b_norm
    for _ in range(max_iter):
        if res <= tol:
            return x
        Ap = A @ p
        alpha = rz / _dot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.sqrt(_dot(r, r)) / b_norm
        z = inv_diag * r
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res <= tol:
        return x
    raise NonConvergenceError(f"CG stopped after {max_iter} iterations", residual=res)

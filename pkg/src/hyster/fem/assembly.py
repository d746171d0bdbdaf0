"""P1 mass and stiffness assembly."""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .mesh import Mesh

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def element_matrices(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle (mass, stiffness) blocks of shape (n_tri, 3, 3)."""
    p = mesh.nodes[mesh.triangles]
    area = mesh.triangle_areas()
    extent = np.ptp(mesh.nodes, axis=0).max()
    if np.any(area < 1e-14 * extent**2):
        raise ValueError("mesh contains degenerate or negatively oriented triangles")
    # gradients of the barycentric coordinates: rotate opposite edges by 90 degrees
    edges = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-edges[..., 1], edges[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    stiff = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    mass = area[:, None, None] * _LOCAL_MASS
    return mass, stiff


def _to_csr(mesh: Mesh, blocks: np.ndarray) -> csr_matrix:
    rows = np.repeat(mesh.triangles, 3, axis=1).reshape(-1)
    cols = np.tile(mesh.triangles, (1, 3)).reshape(-1)
    n = mesh.n_nodes
    mat = coo_matrix((blocks.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble(mesh: Mesh, sigma: float, dt: float) -> tuple[csr_matrix, csr_matrix, csr_matrix]:
    """Return (M, K, A) with A = M + (dt / sigma) K."""
    if not (sigma > 0 and dt > 0):
        raise ValueError("sigma and dt must be positive")
    mass, stiff = element_matrices(mesh)
    M = _to_csr(mesh, mass)
    K = _to_csr(mesh, stiff)
    A = (M + (dt / sigma) * K).tocsr()
    A.sort_indices()
    return M, K, A

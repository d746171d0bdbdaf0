"""Structured triangular meshes of a square."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (n_nodes, 2) coordinates [m]
    triangles: np.ndarray  # (n_tri, 3) counterclockwise node indices
    boundary_nodes: np.ndarray  # sorted indices

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Containing triangle and barycentric coordinates for each point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.nodes[self.triangles]
        x0 = p[:, 0]
        d1 = p[:, 1] - x0
        d2 = p[:, 2] - x0
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        tris = np.empty(len(pts), dtype=int)
        bary = np.empty((len(pts), 3))
        for i, pt in enumerate(pts):
            r = pt - x0
            l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
            l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
            l0 = 1.0 - l1 - l2
            worst = np.minimum(np.minimum(l0, l1), l2)
            best = int(np.argmax(worst))
            if worst[best] < -1e-10:
                raise ValueError(f"point {tuple(pt)} lies outside the mesh")
            tris[i] = best
            bary[i] = (l0[best], l1[best], l2[best])
        return tris, bary

    def interpolation_matrix(self, points):
        """Sparse matrix evaluating P1 fields at ``points``."""
        from scipy.sparse import csr_matrix

        tris, bary = self.locate(points)
        rows = np.repeat(np.arange(len(tris)), 3)
        cols = self.triangles[tris].reshape(-1)
        return csr_matrix((bary.reshape(-1), (rows, cols)), shape=(len(tris), self.n_nodes))

    def write_text(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# nodes {self.n_nodes}\n# node_id x[m] y[m]\n")
            for i, (x, y) in enumerate(self.nodes):
                fh.write(f"{i} {x:.17g} {y:.17g}\n")
            fh.write(f"# triangles {len(self.triangles)}\n# tri_id n0 n1 n2\n")
            for i, (a, b, c) in enumerate(self.triangles):
                fh.write(f"{i} {a} {b} {c}\n")
            fh.write("# boundary_nodes\n")
            fh.write(" ".join(str(b) for b in self.boundary_nodes) + "\n")


def generate_square_mesh(L: float, n: int) -> Mesh:
    """Uniform mesh of [0, L]^2 with n cells per side, each cell cut along the same diagonal."""
    if not L > 0:
        raise ValueError(f"side length must be positive, got {L}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    coords = L * np.arange(n + 1) / n
    xx, yy = np.meshgrid(coords, coords)  # node id = j * (n + 1) + i
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    j, i = np.divmod(np.arange(n * n), n)
    p00 = j * (n + 1) + i
    p10 = p00 + 1
    p01 = p00 + n + 1
    p11 = p01 + 1
    lower = np.column_stack([p00, p10, p11])
    upper = np.column_stack([p00, p11, p01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    jj, ii = np.divmod(np.arange((n + 1) ** 2), n + 1)
    boundary = np.flatnonzero((ii == 0) | (ii == n) | (jj == 0) | (jj == n))
    return Mesh(nodes, triangles, boundary)

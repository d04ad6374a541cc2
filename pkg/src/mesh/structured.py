# src/mesh/structured.py
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-14
DEGENERACY_TOL = 1e-14


def kuhn_permutations(dim: int) -> List[Tuple[int, ...]]:
    """Axis orderings of the Kuhn simplices of a unit cube, in cell order"""
    return list(itertools.permutations(range(dim)))


def permutation_parity(perm: Tuple[int, ...]) -> int:
    """0 for even, 1 for odd permutations"""
    parity = 0
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            parity ^= 1
    return parity


def simplex_geometry(coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Volumes and barycentric gradients for a batch of simplices.

    coords has shape (m, dim+1, dim). Returns volumes (m,) and gradients
    (m, dim+1, dim) of the barycentric coordinate functions, which are the
    P1 basis gradients on each cell.
    """
    dim = coords.shape[2]
    edges = coords[:, 1:, :] - coords[:, :1, :]
    det = np.linalg.det(edges)
    scale = np.abs(edges).max(axis=(1, 2)) ** dim
    degenerate = np.flatnonzero(np.abs(det) <= DEGENERACY_TOL * scale)
    if degenerate.size:
        raise ValueError(f"Degenerate cell (zero volume) at index {int(degenerate[0])}")
    volumes = det / math.factorial(dim)
    grads = np.empty_like(coords)
    # rows of inv(E)^T are the gradients of lambda_1..lambda_d
    grads[:, 1:, :] = np.linalg.inv(edges).transpose(0, 2, 1)
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    return volumes, grads


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh of the unit square/cube.

    vertices (n_vertices, dim) float64, cells (n_cells, dim+1) int64 with
    positive orientation, boundary_vertex (n_vertices,) bool. n is the number
    of subdivisions per axis, so the mesh size is 1/n.
    """
    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_vertex: np.ndarray
    n: int
    parent: Optional["Mesh"] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @cached_property
    def _geometry(self) -> Tuple[np.ndarray, np.ndarray]:
        return simplex_geometry(self.vertices[self.cells])

    @property
    def volumes(self) -> np.ndarray:
        return self._geometry[0]

    @property
    def basis_gradients(self) -> np.ndarray:
        return self._geometry[1]

    @cached_property
    def grid_index(self) -> np.ndarray:
        """Integer lattice coordinates of the vertices (vertices * n)"""
        return np.rint(self.vertices * self.n).astype(np.int64)

    @cached_property
    def vertex_graph(self) -> nx.Graph:
        """Vertex adjacency through cell edges"""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_vertices))
        for a, b in itertools.combinations(range(self.dim + 1), 2):
            graph.add_edges_from(zip(self.cells[:, a].tolist(), self.cells[:, b].tolist()))
        return graph

    def cells_of_vertex(self) -> List[np.ndarray]:
        """For each vertex, the ascending indices of the cells incident to it"""
        flat = self.cells.ravel()
        owner = np.repeat(np.arange(self.n_cells), self.dim + 1)
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=self.n_vertices)
        return np.split(owner[order], np.cumsum(counts)[:-1])

    def cell_points(self, cell_ids: np.ndarray, barycentric: np.ndarray) -> np.ndarray:
        """Physical points for barycentric coordinates (n_q, dim+1) on the given cells"""
        return np.einsum("qk,mkd->mqd", barycentric, self.vertices[self.cells[cell_ids]])


def _vertex_lattice(n: int, dim: int) -> np.ndarray:
    # x fastest, then y, then z
    return np.indices((n + 1,) * dim).reshape(dim, -1)[::-1].T


def build_structured(dim: int, n: int) -> Mesh:
    """Uniform triangulation of the unit square (dim=2) or cube (dim=3).

    Each square/cube is split into dim! Kuhn simplices along its main
    diagonal. In 2-D this is the fixed SW-NE diagonal.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")

    lattice = _vertex_lattice(n, dim)
    vertices = lattice / float(n)
    strides = (n + 1) ** np.arange(dim)

    corners = np.indices((n,) * dim).reshape(dim, -1)[::-1].T
    cells = []
    for perm in kuhn_permutations(dim):
        path = [corners.copy()]
        for axis in perm:
            step = path[-1].copy()
            step[:, axis] += 1
            path.append(step)
        simplex = np.stack([p @ strides for p in path], axis=1)
        if permutation_parity(perm):
            simplex[:, [-2, -1]] = simplex[:, [-1, -2]]
        cells.append(simplex)
    # (n_cubes, dim!, dim+1) so the simplices of one cube are consecutive
    cells = np.stack(cells, axis=1).reshape(-1, dim + 1).astype(np.int64)

    boundary = np.any((vertices <= BOUNDARY_TOL) | (vertices >= 1.0 - BOUNDARY_TOL), axis=1)
    logger.debug(f"Built structured mesh dim={dim} n={n}: {len(vertices)} vertices, {len(cells)} cells")
    return Mesh(dim=dim, vertices=vertices, cells=cells, boundary_vertex=boundary, n=int(n))


def locate_in_cube(dim: int, n: int, cube: np.ndarray, local: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cell index and barycentric coordinates inside a structured mesh.

    cube holds integer cube coordinates (m, dim), local the position inside
    the cube scaled to [0, 1] (m, dim). Ties on shared faces pick the first
    matching Kuhn simplex.
    """
    perms = kuhn_permutations(dim)
    weights = dim ** np.arange(dim)
    lookup = np.full(dim ** dim, -1, dtype=np.int64)
    for i, p in enumerate(perms):
        lookup[np.dot(p, weights)] = i
    order = np.argsort(-local, axis=1, kind="stable")
    codes = lookup[order @ weights]

    cube_linear = cube @ (n ** np.arange(dim))
    cell = cube_linear * len(perms) + codes

    sorted_local = np.take_along_axis(local, order, axis=1)
    bary = np.empty((local.shape[0], dim + 1))
    bary[:, 0] = 1.0 - sorted_local[:, 0]
    bary[:, 1:dim] = sorted_local[:, :-1] - sorted_local[:, 1:]
    bary[:, dim] = sorted_local[:, -1]
    odd = np.array([permutation_parity(p) for p in perms], dtype=bool)[codes]
    bary[odd, -2:] = bary[odd, -1:-3:-1]
    return cell, bary

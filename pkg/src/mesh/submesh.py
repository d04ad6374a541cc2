# src/mesh/submesh.py
from typing import Iterable, Tuple

import numpy as np

from .structured import Mesh


def boundary_faces(cells: np.ndarray) -> np.ndarray:
    """Faces (sorted vertex tuples) that belong to exactly one of the given cells"""
    d1 = cells.shape[1]
    faces = np.concatenate([np.delete(cells, k, axis=1) for k in range(d1)])
    faces = np.sort(faces, axis=1)
    unique, counts = np.unique(faces, axis=0, return_counts=True)
    return unique[counts == 1]


def extract_submesh(fine: Mesh, cell_ids: Iterable[int]) -> Tuple[Mesh, np.ndarray, np.ndarray]:
    """Restrict a mesh to a set of its cells.

    Returns the submesh, local_to_global (local vertex -> mesh vertex) and
    global_to_local (mesh vertex -> local vertex, -1 when absent). A local
    vertex is boundary when it lies on the boundary of the selected cell
    union or on the boundary of the domain.
    """
    if not isinstance(cell_ids, np.ndarray):
        cell_ids = np.fromiter(cell_ids, dtype=np.int64)
    ids = np.unique(cell_ids.astype(np.int64))
    if ids.size == 0:
        raise ValueError("extract_submesh needs a nonempty cell selection")
    if ids[0] < 0 or ids[-1] >= fine.n_cells:
        raise IndexError(f"cell ids must lie in [0, {fine.n_cells}), got range [{ids[0]}, {ids[-1]}]")

    selected = fine.cells[ids]
    local_to_global, inverse = np.unique(selected, return_inverse=True)
    local_cells = inverse.reshape(selected.shape).astype(np.int64)

    on_union_boundary = np.zeros(local_to_global.size, dtype=bool)
    on_union_boundary[np.unique(boundary_faces(local_cells))] = True
    boundary = on_union_boundary | fine.boundary_vertex[local_to_global]

    global_to_local = np.full(fine.n_vertices, -1, dtype=np.int64)
    global_to_local[local_to_global] = np.arange(local_to_global.size)

    submesh = Mesh(
        dim=fine.dim,
        vertices=fine.vertices[local_to_global],
        cells=local_cells,
        boundary_vertex=boundary,
        n=fine.n,
    )
    return submesh, local_to_global, global_to_local

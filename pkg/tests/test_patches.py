# tests/test_patches.py
import numpy as np
import pytest

from src.fem import FeSpace
from src.mesh import build_structured, extract_submesh, refine_uniform
from src.twogrid import build_patches, overlap_count, phi_value


def _patches(dim, n, ratio):
    coarse = build_structured(dim, n)
    fine, refinement = refine_uniform(coarse, ratio)
    return coarse, fine, refinement, build_patches(coarse, fine, refinement)


def _brute_force_omega(coarse, j):
    """Coarse cells sharing a vertex with some cell incident to j"""
    dj = [c for c in range(coarse.n_cells) if j in coarse.cells[c]]
    members = set(np.unique(coarse.cells[dj]).tolist())
    return sorted(c for c in range(coarse.n_cells) if members & set(coarse.cells[c].tolist()))


def test_centre_patch_of_2x2_mesh():
    coarse, fine, refinement, patches = _patches(2, 2, 2)
    assert len(patches) == 9
    centre = patches[4]
    assert centre.dj_cells.size == 6
    assert centre.omega_cells.tolist() == list(range(8))
    assert set(centre.dj_cells.tolist()) <= set(centre.omega_cells.tolist())


def test_interior_patch_sizes_n8():
    coarse, _, _, patches = _patches(2, 8, 1)
    j = 4 + 9 * 4
    assert patches[j].dj_cells.size == 6
    assert patches[j].omega_cells.size == 24


def test_omega_matches_brute_force():
    coarse, _, _, patches = _patches(2, 4, 1)
    for patch in patches:
        assert patch.omega_cells.tolist() == _brute_force_omega(coarse, patch.j)


def test_fine_cells_are_children_of_omega(pair_2d):
    coarse, fine, refinement = pair_2d
    patch = build_patches(coarse, fine, refinement)[12]
    assert patch.fine_cells.size == patch.omega_cells.size * 4
    assert np.all(np.isin(refinement.coarse_cell_of_fine_cell[patch.fine_cells], patch.omega_cells))


@pytest.mark.parametrize("dim,n,ratio", [(2, 4, 2), (3, 2, 2)])
def test_local_dofs_cover_fine_space(dim, n, ratio):
    _, fine, _, patches = _patches(dim, n, ratio)
    space = patches[0].fine_space
    covered = np.zeros(space.n_free, dtype=bool)
    for patch in patches:
        covered[patch.local_to_global_free_dof] = True
    assert covered.all()


def test_local_dofs_strictly_inside_omega(pair_2d):
    coarse, fine, refinement = pair_2d
    for patch in build_patches(coarse, fine, refinement):
        submesh, local_to_global, _ = extract_submesh(fine, patch.fine_cells)
        on_boundary = local_to_global[submesh.boundary_vertex]
        vertices = patch.fine_space.free_vertices[patch.local_to_global_free_dof]
        assert not np.isin(vertices, on_boundary).any()
        assert np.all(np.diff(patch.local_to_global_free_dof) > 0)
        assert patch.local_space.n_free == patch.n_local


def test_zero_extension_vanishes_on_patch_boundary(pair_2d, rng):
    coarse, fine, refinement = pair_2d
    patch = build_patches(coarse, fine, refinement)[7]
    values = np.zeros(patch.fine_space.n_free)
    patch.zero_extend(rng.standard_normal(patch.n_local), out=values)
    nodal = np.zeros(fine.n_vertices)
    nodal[patch.fine_space.free_vertices] = values
    submesh, local_to_global, _ = extract_submesh(fine, patch.fine_cells)
    assert np.all(nodal[local_to_global[submesh.boundary_vertex]] == 0.0)
    with pytest.raises(ValueError):
        patch.zero_extend(np.zeros(patch.n_local + 1))


def test_support_boundary_is_inside_expansion(pair_2d):
    coarse, fine, refinement = pair_2d
    for patch in build_patches(coarse, fine, refinement):
        dj_mesh, dj_vertices, _ = extract_submesh(fine, patch.dj_fine_cells)
        omega_mesh, omega_vertices, _ = extract_submesh(fine, patch.fine_cells)
        relative = dj_vertices[dj_mesh.boundary_vertex & ~fine.boundary_vertex[dj_vertices]]
        assert not np.isin(relative, omega_vertices[omega_mesh.boundary_vertex]).any()
        corners = coarse.vertices[np.unique(coarse.cells[patch.dj_cells])]
        assert np.ptp(corners, axis=0).max() <= 2 * coarse.h + 1e-14


def test_phi_value(pair_2d, rng):
    coarse, fine, refinement = pair_2d
    patches = build_patches(coarse, fine, refinement)
    patch = patches[12]
    vertex = refinement.fine_vertex_of_coarse_vertex[12]
    cell = next(c for c in patch.dj_fine_cells if vertex in fine.cells[c])
    bary = (fine.cells[cell] == vertex).astype(float)
    assert phi_value(patch, cell, bary) == pytest.approx(1.0)

    outside = np.setdiff1d(np.arange(fine.n_cells), patch.dj_fine_cells)[0]
    assert phi_value(patch, outside, np.full(3, 1.0 / 3.0)) == 0.0

    for _ in range(100):
        cell = int(rng.integers(fine.n_cells))
        bary = rng.dirichlet(np.ones(3))
        assert sum(phi_value(p, cell, bary) for p in patches) == pytest.approx(1.0, abs=1e-12)

    with pytest.raises(IndexError):
        phi_value(patch, fine.n_cells, bary)


def test_overlap_count_small_mesh():
    coarse, fine, _, patches = _patches(2, 2, 1)
    brute = max(sum(c in _brute_force_omega(coarse, j) for j in range(coarse.n_vertices))
                for c in range(coarse.n_cells))
    kappa = overlap_count(patches, fine)
    assert kappa == brute
    assert kappa < len(patches)


def test_overlap_count_independent_of_mesh_size():
    kappas = []
    for n in (8, 16, 32):
        _, fine, _, patches = _patches(2, n, 1)
        kappas.append(overlap_count(patches, fine))
    assert len(set(kappas)) == 1


def test_overlap_count_brute_force_n16():
    coarse, fine, _, patches = _patches(2, 16, 1)
    omegas = [set(_brute_force_omega(coarse, j)) for j in range(coarse.n_vertices)]
    brute = max(sum(c in omega for omega in omegas) for c in range(coarse.n_cells))
    assert overlap_count(patches, fine) == brute


def test_mismatched_pair_rejected(pair_2d):
    coarse, fine, refinement = pair_2d
    with pytest.raises(ValueError):
        build_patches(build_structured(2, 4), fine, refinement)

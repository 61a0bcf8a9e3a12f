"""Unit tests for the quadratic finite element assembly and direct solver."""

import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp

from screenguide import (
    NumericalError,
    WaveguideGeometry2D,
    assemble,
    assemble_stiffness_mass,
    build_mesh,
    solve_linear,
)
from screenguide.fem import DofMap, SparseComplexSystem, shape_values

# element matrices of the unit right triangle, local order
# [v1, v2, v3, m12, m23, m31]; exact rational values
REF_MASS_360 = np.array([
    [6, -1, -1, 0, -4, 0],
    [-1, 6, -1, 0, 0, -4],
    [-1, -1, 6, -4, 0, 0],
    [0, 0, -4, 32, 16, 16],
    [-4, 0, 0, 16, 32, 16],
    [0, -4, 0, 16, 16, 32],
], dtype=float)
REF_STIFF_6 = np.array([
    [6, 1, 1, -4, 0, -4],
    [1, 3, 0, -4, 0, 0],
    [1, 0, 3, 0, 0, -4],
    [-4, -4, 0, 16, -8, 0],
    [0, 0, 0, -8, 16, -8],
    [-4, 0, -4, 0, -8, 16],
], dtype=float)


def reference_triangle_mesh():
    """Single unit right triangle packaged as a Mesh-compatible object."""
    mesh = build_mesh(WaveguideGeometry2D(0.5, 1.0, None, None), h=0.5)
    xy = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                   [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
    return replace(
        mesh,
        node_xy=xy,
        n_vertices=3,
        triangles=np.array([[0, 1, 2]]),
        tri_midnodes=np.array([[3, 4, 5]]),
        seam_table=np.zeros((0, 2), dtype=np.int64),
        seam_segments=0,
    )


def test_shape_values_partition_of_unity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        lam = rng.dirichlet((1.0, 1.0, 1.0))
        vals = shape_values(lam)
        assert vals.sum() == pytest.approx(1.0, abs=1e-14)


def test_shape_values_nodal_basis():
    nodes = [(1, 0, 0), (0, 1, 0), (0, 0, 1),
             (0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)]
    vals = np.array([shape_values(np.array(lam)) for lam in nodes])
    np.testing.assert_allclose(vals, np.eye(6), atol=1e-14)


def test_reference_element_matrices():
    mesh = reference_triangle_mesh()
    S, M = assemble_stiffness_mass(mesh)
    np.testing.assert_allclose(M.toarray() * 360.0, REF_MASS_360, atol=4e-13)
    np.testing.assert_allclose(S.toarray() * 6.0, REF_STIFF_6, atol=4e-13)


def test_stiffness_annihilates_constants():
    mesh = build_mesh(WaveguideGeometry2D(0.6, 1.2, None, None), h=0.17)
    S, M = assemble_stiffness_mass(mesh)
    ones = np.ones(S.shape[0])
    assert np.abs(S @ ones).max() < 1e-12


def test_mass_integrates_area():
    geom = WaveguideGeometry2D(0.6, 1.2, None, None)
    mesh = build_mesh(geom, h=0.17)
    S, M = assemble_stiffness_mass(mesh)
    ones = np.ones(M.shape[0])
    assert ones @ (M @ ones) == pytest.approx(2.4 * 1.0, rel=1e-13)


def test_mass_integrates_quadratics_exactly():
    # P2 interpolation of z*y is exact, and so is its integral
    geom = WaveguideGeometry2D(0.6, 1.2, None, None)
    mesh = build_mesh(geom, h=0.23)
    S, M = assemble_stiffness_mass(mesh)
    z, y = mesh.node_xy[:, 0], mesh.node_xy[:, 1]
    ones = np.ones(M.shape[0])
    # integral of z^2 over [-1.2,1.2]x[0,1] = 2*1.2^3/3
    assert z @ (M @ z) == pytest.approx(2.0 * 1.2 ** 3 / 3.0, rel=1e-12)
    # integral of z*y = 0 by symmetry
    assert z @ (M @ y) == pytest.approx(0.0, abs=1e-13)


def test_assemble_combines_linearly_in_kappa_squared():
    geom = WaveguideGeometry2D(0.5, 1.0, None, None)
    mesh = build_mesh(geom, h=0.25)
    S, M = assemble_stiffness_mass(mesh)
    for kappa in (0.5, 1.0, 2.0):
        A = assemble(mesh, kappa).matrix
        diff = (A - (S - kappa ** 2 * M)).toarray()
        assert np.abs(diff).max() < 1e-14


def test_assembled_matrix_is_complex_symmetric():
    geom = WaveguideGeometry2D(
        0.6, 1.2, ((0.49, 0.51),), ((0.49, 0.51),))
    mesh = build_mesh(geom, h=0.08)
    A = assemble(mesh, 2.0).matrix
    assert np.abs((A - A.T).toarray()).max() < 1e-13


def test_closed_screen_decouples_sheets():
    geom = WaveguideGeometry2D(0.5, 1.0, (), None)
    mesh = build_mesh(geom, h=0.25)
    A = assemble(mesh, 1.0).matrix
    for a, b in mesh.seam_table:
        assert A[a, b] == 0.0
        assert A[b, a] == 0.0


def test_solve_manufactured_solution():
    geom = WaveguideGeometry2D(0.5, 1.0, None, None)
    mesh = build_mesh(geom, h=0.2)
    S, M = assemble_stiffness_mass(mesh)
    matrix = (S + M).astype(np.complex128).tocsr()  # positive definite
    rng = np.random.default_rng(11)
    x = rng.standard_normal(matrix.shape[0]) + 1j * rng.standard_normal(matrix.shape[0])
    system = SparseComplexSystem(matrix=matrix, rhs=matrix @ x,
                                 dof_map=DofMap.from_mesh(mesh), kappa=1.0)
    sol = solve_linear(system)
    assert np.abs(sol - x).max() < 1e-9


def test_solve_zero_rhs_returns_zero():
    geom = WaveguideGeometry2D(0.5, 1.0, None, None)
    mesh = build_mesh(geom, h=0.25)
    system = assemble(mesh, 1.0)
    sol = solve_linear(system)
    assert np.all(sol == 0.0)


def test_solve_reports_singular_system():
    mesh = build_mesh(WaveguideGeometry2D(0.5, 1.0, None, None), h=0.5)
    n = 4
    matrix = sp.csr_matrix(np.diag([1.0, 1.0, 1.0, 0.0]).astype(np.complex128))
    system = SparseComplexSystem(matrix=matrix, rhs=np.ones(n, dtype=np.complex128),
                                 dof_map=DofMap.from_mesh(mesh), kappa=1.0)
    with pytest.raises(NumericalError):
        solve_linear(system)


def test_dof_map_spans_all_nodes():
    geom = WaveguideGeometry2D(0.6, 1.2, ((0.49, 0.51),), ((0.49, 0.51),))
    mesh = build_mesh(geom, h=0.1)
    dof_map = DofMap.from_mesh(mesh)
    assert dof_map.n_dofs == len(mesh.node_xy)
    assert dof_map.tri_dofs.shape == (len(mesh.triangles), 6)
    assert set(dof_map.tri_dofs.flatten()) == set(range(dof_map.n_dofs))

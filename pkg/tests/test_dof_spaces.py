import numpy as np
import pytest

from maxtev.dof_spaces import (
    CoupledFieldSpace,
    build_coupled_field_space,
    build_gradient_matrix,
    build_multiplier_space,
    coupled_t_operator,
    edge_dof_map,
    evaluate_field,
    lagrange_dof_map,
)
from maxtev.elements import tet_geometry
from maxtev.errors import SpaceMismatch, UnsupportedOrder
from maxtev.mesh import TetMesh, build_cube_mesh, build_topology
from maxtev.types import FieldComponent, TVariant

RNG = np.random.default_rng(7)


def _reference_points(
    space: CoupledFieldSpace, tet: int, x: np.ndarray
) -> np.ndarray:
    """Reference coordinates of physical points `x` in the element frame of `tet`."""
    mesh = space.mesh
    geometry = tet_geometry(mesh.vertices[mesh.sorted_tets[[tet]]])
    return np.linalg.solve(geometry.jacobian[0], (x - geometry.origin[0]).T).T


def _tangential(values: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return values - np.outer(values @ normal, normal)


def _face_points(mesh: TetMesh, face: int, count: int = 6) -> np.ndarray:
    weights = RNG.dirichlet(np.ones(3), size=count)
    return weights @ mesh.vertices[mesh.faces[face]]


def _face_normal(mesh: TetMesh, face: int) -> np.ndarray:
    a, b, c = mesh.vertices[mesh.faces[face]]
    normal = np.cross(b - a, c - a)
    return normal / np.linalg.norm(normal)


@pytest.mark.parametrize(
    "n, order, dim", [(2, 0, 236), (3, 0, 774), (4, 0, 1816), (2, 1, 1240)]
)
def test_coupled_dimension(n: int, order: int, dim: int) -> None:
    assert build_coupled_field_space(build_cube_mesh(n), order).dim == dim


@pytest.mark.slow
def test_coupled_dimension_large() -> None:
    assert build_coupled_field_space(build_cube_mesh(3), 1).dim == 4140
    assert build_coupled_field_space(build_cube_mesh(6), 0).dim == 6084


def test_coupled_dimension_thick_l(thick_l1: TetMesh) -> None:
    space = build_coupled_field_space(thick_l1, 1)

    assert space.dim == 476
    assert space.dim == 2 * space.field.dim - space.n_boundary


def test_multiplier_dimensions(cube1: TetMesh, cube2: TetMesh) -> None:
    assert build_multiplier_space(cube1, 1).dim == 9
    assert build_multiplier_space(cube2, 1).dim == 43


def test_single_tet_multiplier() -> None:
    vertices = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    tets = np.array([[0, 1, 2, 3]])
    mesh = build_topology(TetMesh(vertices=vertices, tets=tets, h=1.0))

    space = build_multiplier_space(mesh, 1)
    assert space.dim == 3
    assert space.pinned_vertex == 0


def test_pinned_vertex_must_be_on_boundary(cube1: TetMesh) -> None:
    interior = int(np.flatnonzero(~cube1.boundary_vertices)[0])

    with pytest.raises(ValueError):
        build_multiplier_space(cube1, 1, pinned_vertex=interior)
    assert build_multiplier_space(cube1, 1, pinned_vertex=3).pinned_vertex == 3


def test_field_dof_maps(cube1: TetMesh) -> None:
    edges = edge_dof_map(cube1, 1)
    assert edges.dim == 2 * cube1.n_edges + 2 * cube1.n_faces
    assert edges.cell_dofs.shape == (12, 20)
    assert edges.n_boundary == 2 * 18 + 2 * 12

    nodes = lagrange_dof_map(cube1, 2)
    assert nodes.dim == cube1.n_vertices + cube1.n_edges
    assert nodes.cell_dofs.shape == (12, 10)

    with pytest.raises(UnsupportedOrder):
        edge_dof_map(cube1, 2)
    with pytest.raises(UnsupportedOrder):
        lagrange_dof_map(cube1, 3)


@pytest.mark.parametrize("order", [0, 1])
def test_boundary_dofs_are_shared(cube2: TetMesh, order: int) -> None:
    space = build_coupled_field_space(cube2, order)
    difference = space.prolongation(FieldComponent.W_MINUS_V).toarray()

    assert np.allclose(difference[space.field.boundary], 0.0)
    assert np.array_equal(
        space.w_index[space.field.boundary], space.v_index[space.field.boundary]
    )


@pytest.mark.parametrize("order", [0, 1])
def test_tangential_continuity(cube2: TetMesh, order: int) -> None:
    space = build_coupled_field_space(cube2, order)
    x = RNG.standard_normal(space.dim) + 1j * RNG.standard_normal(space.dim)
    face = int(np.flatnonzero(~cube2.boundary_faces)[0])
    first, second = np.flatnonzero((cube2.tet_faces == face).any(axis=1))
    points = _face_points(cube2, face)
    normal = _face_normal(cube2, face)

    for which in ("w", "v"):
        left = evaluate_field(
            space, x, which, _reference_points(space, first, points), [first]
        )[0]
        right = evaluate_field(
            space, x, which, _reference_points(space, second, points), [second]
        )[0]
        assert np.allclose(_tangential(left, normal), _tangential(right, normal))


@pytest.mark.parametrize("order", [0, 1])
def test_difference_has_no_boundary_trace(cube2: TetMesh, order: int) -> None:
    space = build_coupled_field_space(cube2, order)
    x = RNG.standard_normal(space.dim)
    face = int(np.flatnonzero(cube2.boundary_faces)[0])
    (tet,) = np.flatnonzero((cube2.tet_faces == face).any(axis=1))
    points = _face_points(cube2, face)

    values = evaluate_field(
        space, x, "w-minus-v", _reference_points(space, tet, points), [tet]
    )[0]
    assert np.allclose(_tangential(values, _face_normal(cube2, face)), 0.0)


@pytest.mark.parametrize("order", [0, 1])
def test_gradient_of_linear_function(cube2: TetMesh, order: int) -> None:
    H = build_coupled_field_space(cube2, order)
    Q = build_multiplier_space(cube2, order + 1)
    G = build_gradient_matrix(Q, H)
    slope = np.array([0.5, -1.0, 2.0])

    nodal = (cube2.vertices - cube2.vertices[Q.pinned_vertex]) @ slope
    if order == 1:
        midpoints = cube2.vertices[cube2.edges].mean(axis=1)
        nodal = np.concatenate(
            [nodal, (midpoints - cube2.vertices[Q.pinned_vertex]) @ slope]
        )
    c = np.zeros(Q.dim)
    for index in (Q.p_index, Q.q_index):
        valid = index >= 0
        c[index[valid]] = nodal[valid]

    assert G.shape == (H.dim, Q.dim)
    points = np.array([[0.2, 0.3, 0.1], [0.1, 0.1, 0.6]])
    for which in ("w", "v"):
        assert np.allclose(evaluate_field(H, G @ c, which, points), slope)


def test_gradient_space_mismatch(cube1: TetMesh, cube2: TetMesh) -> None:
    with pytest.raises(SpaceMismatch):
        build_gradient_matrix(
            build_multiplier_space(cube1, 1), build_coupled_field_space(cube2, 0)
        )
    with pytest.raises(SpaceMismatch):
        build_gradient_matrix(
            build_multiplier_space(cube1, 2), build_coupled_field_space(cube1, 0)
        )


@pytest.mark.parametrize("variant", list(TVariant))
def test_t_operator(cube2: TetMesh, variant: TVariant) -> None:
    space = build_coupled_field_space(cube2, 0)
    T = coupled_t_operator(space, variant)
    x = RNG.standard_normal(space.dim)
    w, v = space.prolongation("w") @ x, space.prolongation("v") @ x

    y = T @ x
    if variant is TVariant.W_2W_MINUS_V:
        expected = (w, 2 * w - v)
    else:
        expected = (w - 2 * v, -v)
    assert np.allclose(space.prolongation("w") @ y, expected[0])
    assert np.allclose(space.prolongation("v") @ y, expected[1])
    assert np.allclose(T @ y, x)


def test_evaluate_field_wrong_dimension(cube1: TetMesh) -> None:
    space = build_coupled_field_space(cube1, 0)

    with pytest.raises(SpaceMismatch):
        evaluate_field(space, np.zeros(space.dim + 1), "w", np.zeros((1, 3)))

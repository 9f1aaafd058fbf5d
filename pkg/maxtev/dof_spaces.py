"""DOF maps of single fields and of the trace-coupled pair spaces.

Single fields
    Edge order `k` field: order 0 has one DOF per edge (`e`); order 1 has two
    per edge (`2e`, `2e + 1`) followed by two per face (`2E + 2f`,
    `2E + 2f + 1`). Lagrange degree 1 has one DOF per vertex; degree 2 adds one
    per edge (`V + e`).

Coupled spaces
    A pair `(w, v)` whose difference has zero tangential trace shares the
    boundary DOFs of both fields. Coupled coefficients are laid out as
    `[interior w | interior v | shared boundary]`. The multiplier pairs `(p, q)`
    use the same layout with Lagrange DOFs, minus one pinned boundary vertex
    which removes the constant pair from the kernel of the gradient.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from maxtev.elements import (
    EDGE_DOFS,
    LAGRANGE_DOFS,
    TetGeometry,
    eval_edge_basis,
    local_gradient_matrix,
    push_forward,
    tet_geometry,
)
from maxtev.errors import SpaceMismatch, UnsupportedOrder
from maxtev.mesh import LOCAL_EDGES, LOCAL_FACES, TetMesh
from maxtev.types import FieldComponent, TVariant

IntArray = NDArray[np.int64]
BoolArray = NDArray[np.bool_]


@dataclass(frozen=True)
class FieldDofMap:
    """DOF map of one scalar or vector field on a mesh."""

    family: str
    order: int
    cell_dofs: IntArray
    boundary: BoolArray

    @property
    def dim(self) -> int:
        return int(self.boundary.shape[0])

    @property
    def n_boundary(self) -> int:
        return int(self.boundary.sum())

    @property
    def n_interior(self) -> int:
        return self.dim - self.n_boundary


def edge_dof_map(mesh: TetMesh, order: int) -> FieldDofMap:
    if order not in EDGE_DOFS:
        raise UnsupportedOrder(order, supported=tuple(EDGE_DOFS))
    st = mesh.sorted_tets
    edges = mesh.edge_ids(st[:, LOCAL_EDGES])
    boundary_edges = np.asarray(mesh.boundary_edges)
    if order == 0:
        return FieldDofMap("edge", 0, edges, boundary_edges.copy())

    faces = mesh.face_ids(st[:, LOCAL_FACES])
    n_edges = mesh.n_edges
    edge_dofs = np.stack([2 * edges, 2 * edges + 1], axis=-1).reshape(-1, 12)
    face_dofs = np.stack(
        [2 * n_edges + 2 * faces, 2 * n_edges + 2 * faces + 1], axis=-1
    ).reshape(-1, 8)
    boundary = np.concatenate(
        [
            np.repeat(boundary_edges, 2),
            np.repeat(np.asarray(mesh.boundary_faces), 2),
        ]
    )
    cell_dofs = np.concatenate([edge_dofs, face_dofs], axis=1)
    return FieldDofMap("edge", 1, cell_dofs, boundary)


def lagrange_dof_map(mesh: TetMesh, degree: int) -> FieldDofMap:
    if degree not in LAGRANGE_DOFS:
        raise UnsupportedOrder(degree, supported=tuple(LAGRANGE_DOFS))
    st = mesh.sorted_tets
    boundary_vertices = np.asarray(mesh.boundary_vertices)
    if degree == 1:
        return FieldDofMap("lagrange", 1, st, boundary_vertices.copy())
    edges = mesh.edge_ids(st[:, LOCAL_EDGES])
    return FieldDofMap(
        "lagrange",
        2,
        np.concatenate([st, mesh.n_vertices + edges], axis=1),
        np.concatenate([boundary_vertices, np.asarray(mesh.boundary_edges)]),
    )


def _pair_layout(boundary: BoolArray) -> tuple[IntArray, IntArray, int, int]:
    interior = np.flatnonzero(~boundary)
    shared = np.flatnonzero(boundary)
    n_int = interior.size
    first = np.empty(boundary.shape[0], dtype=np.int64)
    second = np.empty(boundary.shape[0], dtype=np.int64)
    first[interior] = np.arange(n_int)
    second[interior] = n_int + np.arange(n_int)
    first[shared] = second[shared] = 2 * n_int + np.arange(shared.size)
    return first, second, n_int, 2 * n_int + shared.size


def _selection(index: IntArray, n_cols: int) -> sp.csr_matrix:
    """0/1 matrix with `S[i, index[i]] = 1`; rows with `index < 0` are empty."""
    rows = np.flatnonzero(index >= 0)
    return sp.csr_matrix(
        (np.ones(rows.size), (rows, index[rows])), shape=(index.shape[0], n_cols)
    )


@dataclass(frozen=True, eq=False)
class CoupledFieldSpace:
    """Edge pairs `(w, v)` with shared boundary DOFs."""

    mesh: TetMesh
    order: int
    field: FieldDofMap
    w_index: IntArray
    v_index: IntArray
    n_interior: int
    dim: int

    @property
    def n_boundary(self) -> int:
        return self.field.n_boundary

    def prolongation(self, component: FieldComponent | str) -> sp.csr_matrix:
        """Matrix extracting per-field coefficients from coupled ones."""
        match FieldComponent(component):
            case FieldComponent.W:
                return self._p_w
            case FieldComponent.V:
                return self._p_v
            case FieldComponent.W_MINUS_V:
                return (self._p_w - self._p_v).tocsr()
            case _:
                assert False, "This should never happen."

    @cached_property
    def _p_w(self) -> sp.csr_matrix:
        return _selection(self.w_index, self.dim)

    @cached_property
    def _p_v(self) -> sp.csr_matrix:
        return _selection(self.v_index, self.dim)

    @cached_property
    def interior_v(self) -> sp.csr_matrix:
        """`P_v` restricted to interior rows (boundary DOFs belong to `w` too)."""
        index = np.where(self.field.boundary, -1, self.v_index)
        return _selection(index, self.dim)


def build_coupled_field_space(mesh: TetMesh, order: int) -> CoupledFieldSpace:
    """Coupled space of edge order `order`: `dim = 2·dim_field - n_boundary`.

    Raises:
        UnsupportedOrder: for orders other than 0 and 1.
    """
    field = edge_dof_map(mesh, order)
    w_index, v_index, n_int, dim = _pair_layout(field.boundary)
    return CoupledFieldSpace(
        mesh=mesh,
        order=order,
        field=field,
        w_index=w_index,
        v_index=v_index,
        n_interior=n_int,
        dim=dim,
    )


@dataclass(frozen=True, eq=False)
class MultiplierSpace:
    """Lagrange pairs `(p, q)` with shared boundary DOFs and one pinned vertex."""

    mesh: TetMesh
    degree: int
    field: FieldDofMap
    p_index: IntArray
    q_index: IntArray
    pinned_vertex: int
    dim: int

    @cached_property
    def restriction_p(self) -> sp.csr_matrix:
        return _selection(self.p_index, self.dim)

    @cached_property
    def restriction_q(self) -> sp.csr_matrix:
        return _selection(self.q_index, self.dim)


def build_multiplier_space(
    mesh: TetMesh, degree: int, pinned_vertex: int | None = None
) -> MultiplierSpace:
    """Multiplier pairs of Lagrange degree `degree`.

    `dim = 2·(interior DOFs) + (boundary DOFs) - 1`. The pinned DOF is the
    boundary vertex with the smallest index unless `pinned_vertex` is given.

    Raises:
        ValueError: if `pinned_vertex` is not a boundary vertex.
    """
    field = lagrange_dof_map(mesh, degree)
    boundary_vertices = np.flatnonzero(np.asarray(mesh.boundary_vertices))
    if pinned_vertex is None:
        pinned_vertex = int(boundary_vertices[0])
    elif pinned_vertex not in set(boundary_vertices.tolist()):
        raise ValueError(f"Vertex {pinned_vertex} is not a boundary vertex.")

    first, second, _, full_dim = _pair_layout(field.boundary)
    pinned = first[pinned_vertex]
    # drop the pinned column and close the gap
    shift = (np.arange(full_dim) > pinned).astype(np.int64)
    remap = np.arange(full_dim) - shift
    remap[pinned] = -1
    return MultiplierSpace(
        mesh=mesh,
        degree=degree,
        field=field,
        p_index=remap[first],
        q_index=remap[second],
        pinned_vertex=pinned_vertex,
        dim=full_dim - 1,
    )


def _field_gradient(edge: FieldDofMap, lagrange: FieldDofMap) -> sp.csr_matrix:
    local = local_gradient_matrix(edge.order)
    n_tets = edge.cell_dofs.shape[0]
    rows = np.repeat(edge.cell_dofs[:, :, None], local.shape[1], axis=2)
    cols = np.repeat(lagrange.cell_dofs[:, None, :], local.shape[0], axis=1)
    vals = np.broadcast_to(local, (n_tets,) + local.shape)
    mask = vals != 0.0
    rows, cols, vals = rows[mask], cols[mask], vals[mask]
    # assignment, not accumulation: shared entities repeat identical entries
    keys = rows * lagrange.dim + cols
    _, first = np.unique(keys, return_index=True)
    return sp.csr_matrix(
        (vals[first], (rows[first], cols[first])), shape=(edge.dim, lagrange.dim)
    )


def build_gradient_matrix(Q: MultiplierSpace, H: CoupledFieldSpace) -> sp.csr_matrix:
    """Coupled coefficients of `(grad p, grad q)` for multiplier coefficients.

    Raises:
        SpaceMismatch: if the spaces live on different meshes or
            `Q.degree != H.order + 1`.
    """
    if Q.mesh is not H.mesh:
        raise SpaceMismatch(
            "Multiplier and field spaces are built on different meshes."
        )
    if Q.degree != H.order + 1:
        raise SpaceMismatch(
            f"Lagrange degree {Q.degree} does not match edge order {H.order}."
        )
    g = _field_gradient(H.field, Q.field)
    w_part = H.prolongation(FieldComponent.W).T @ g @ Q.restriction_p
    v_part = H.interior_v.T @ g @ Q.restriction_q
    return (w_part + v_part).tocsr()


def field_gradient_matrix(Q: MultiplierSpace, H: CoupledFieldSpace) -> sp.csr_matrix:
    """Per-field gradient matrix (edge DOFs × Lagrange DOFs)."""
    return _field_gradient(H.field, Q.field)


def coupled_t_operator(space: CoupledFieldSpace, variant: TVariant) -> sp.csr_matrix:
    """The isomorphism `T` on coupled coefficients.

    `(w, 2w - v)` keeps the shared block (`2b - b = b`); `(w - 2v, -v)` negates
    it (`b - 2b = -b`). Both images stay in the coupled space.
    """
    n_int = space.n_interior
    n_b = space.dim - 2 * n_int
    eye = sp.identity(n_int, format="csr")
    zero = sp.csr_matrix((n_int, n_int))
    match TVariant(variant):
        case TVariant.W_2W_MINUS_V:
            blocks = [
                [eye, zero, None],
                [2 * eye, -eye, None],
                [None, None, sp.identity(n_b)],
            ]
        case TVariant.W_MINUS_2V:
            blocks = [
                [eye, -2 * eye, None],
                [zero, -eye, None],
                [None, None, -sp.identity(n_b)],
            ]
        case _:
            assert False, "This should never happen."
    return sp.bmat(blocks, format="csr")


def space_geometry(space: CoupledFieldSpace | MultiplierSpace) -> TetGeometry:
    """Geometry of the mesh tets in the ascending element frame."""
    mesh = space.mesh
    return tet_geometry(mesh.vertices[mesh.sorted_tets])


def evaluate_field(
    space: CoupledFieldSpace,
    x: NDArray[np.generic],
    which: FieldComponent | str,
    points: NDArray[np.float64],
    tets: IntArray | None = None,
) -> NDArray[np.complex128]:
    """Values of `w`, `v` or `w - v` at reference `points` of the given tets.

    Args:
        space: the coupled space of `x`.
        x: coupled coefficients (eigenvector field block).
        which: component to evaluate.
        points: reference coordinates `(P, 3)`.
        tets: tet indices, all tets when `None`.

    Returns:
        Physical values `(T, P, 3)`.

    Raises:
        SpaceMismatch: if `x` does not have the dimension of `space`.
    """
    x = np.asarray(x)
    if x.shape != (space.dim,):
        raise SpaceMismatch(
            f"Coefficient vector of shape {x.shape} for space of dimension "
            f"{space.dim}."
        )
    coefficients = space.prolongation(which) @ x
    mesh = space.mesh
    selected = np.arange(mesh.n_tets) if tets is None else np.asarray(tets)
    geometry = tet_geometry(mesh.vertices[mesh.sorted_tets[selected]])
    ref_values, _ = eval_edge_basis(space.order, points)
    values, _ = push_forward(geometry, ref_values)
    local = coefficients[space.field.cell_dofs[selected]]
    return np.einsum("tpna,tn->tpa", values, local)  # type: ignore[no-any-return]

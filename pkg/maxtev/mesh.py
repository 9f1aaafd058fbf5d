"""Structured tetrahedral meshes of the unit cube and the thick L-shaped prism.

Both domains are partitioned into congruent cubes of side `h = 1/n`. Every cube
gains a body-center vertex, each of its six square faces is split into two
triangles by the diagonal through the face's lexicographically smallest corner,
and each (center, face triangle) pair is a tetrahedron: 12 per cube. Because the
diagonal only depends on the square face itself, two cubes sharing a face split
it the same way and the mesh is conforming.

Vertex numbering: grid vertices first in lexicographic `(x1, x2, x3)` order,
then cube centers in cube-lexicographic order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from maxtev.errors import InvertedTet, NonManifoldFace
from maxtev.types import Domain

IntArray = NDArray[np.int64]
FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]

# local vertex pairs/triples of a tetrahedron (face i is opposite vertex i)
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

# permutation codes of a face's local vertex order (index of the sorting argsort)
FACE_PERMUTATIONS = tuple(itertools.permutations(range(3)))


def _freeze(*arrays: np.ndarray) -> None:
    for arr in arrays:
        arr.setflags(write=False)


@dataclass(frozen=True)
class TetMesh:
    """A tetrahedral mesh together with its edge/face topology.

    Meshes built by [`build_topology`][maxtev.mesh.build_topology] are complete;
    a mesh with only `vertices` and `tets` is the input of that function.
    """

    vertices: FloatArray
    tets: IntArray
    h: float
    domain: Domain | None = None
    edges: IntArray | None = None
    faces: IntArray | None = None
    tet_edges: IntArray | None = None
    tet_edge_signs: NDArray[np.int8] | None = None
    tet_faces: IntArray | None = None
    tet_face_perms: NDArray[np.int8] | None = None
    boundary_vertices: BoolArray | None = None
    boundary_edges: BoolArray | None = None
    boundary_faces: BoolArray | None = None

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_tets(self) -> int:
        return int(self.tets.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self._topology("edges").shape[0])

    @property
    def n_faces(self) -> int:
        return int(self._topology("faces").shape[0])

    def _topology(self, name: str) -> np.ndarray:
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"Mesh topology not built: '{name}' is missing.")
        return value  # type: ignore[no-any-return]

    @property
    def sorted_tets(self) -> IntArray:
        """Tet vertex ids in ascending global order (the element frame)."""
        return np.sort(self.tets, axis=1)

    def signed_volumes(self) -> FloatArray:
        return signed_volumes(self.vertices, self.tets)

    def volumes(self) -> FloatArray:
        return np.abs(self.signed_volumes())  # type: ignore[no-any-return]

    def barycenters(self) -> FloatArray:
        return self.vertices[self.tets].mean(axis=1)  # type: ignore[no-any-return]

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces - self.n_tets

    def edge_ids(self, pairs: IntArray) -> IntArray:
        """Global ids of edges given as vertex pairs (any order)."""
        return _lookup(
            self._topology("edges"), np.sort(pairs, axis=-1), self.n_vertices
        )

    def face_ids(self, triples: IntArray) -> IntArray:
        """Global ids of faces given as vertex triples (any order)."""
        return _lookup(
            self._topology("faces"), np.sort(triples, axis=-1), self.n_vertices
        )

    def boundary_face_normals(self) -> FloatArray:
        """Unit normals of the boundary faces (orientation not normalized)."""
        faces = self._topology("faces")[self._topology("boundary_faces")]
        p = self.vertices[faces]
        normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        length = np.linalg.norm(normal, axis=1, keepdims=True)
        return normal / length  # type: ignore[no-any-return]


def _keys(rows: IntArray, base: int) -> IntArray:
    key = np.zeros(rows.shape[:-1], dtype=np.int64)
    for i in range(rows.shape[-1]):
        key = key * base + rows[..., i]
    return key


def _lookup(table: IntArray, rows: IntArray, base: int) -> IntArray:
    table_keys = _keys(table, base)
    keys = _keys(rows, base)
    idx = np.searchsorted(table_keys, keys)
    idx = np.clip(idx, 0, len(table_keys) - 1)
    if not np.all(table_keys[idx] == keys):
        raise KeyError("Entity not found in mesh topology.")
    return idx


def signed_volumes(vertices: FloatArray, tets: IntArray) -> FloatArray:
    p = vertices[tets]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=-1)
    return np.linalg.det(jac) / 6.0  # type: ignore[no-any-return]


def build_topology(mesh: TetMesh) -> TetMesh:
    """Fill edges, faces, incidence, orientation signs and boundary flags.

    Edges and faces are deduplicated and sorted lexicographically; each stores
    its vertex ids in ascending order.

    Raises:
        InvertedTet: if a tetrahedron has non-positive signed volume.
        NonManifoldFace: if a face is shared by more than two tetrahedra.
    """
    tets = np.asarray(mesh.tets, dtype=np.int64)
    n_tets = tets.shape[0]

    volumes = signed_volumes(mesh.vertices, tets)
    bad = np.flatnonzero(volumes <= 0.0)
    if bad.size:
        raise InvertedTet(int(bad[0]), float(volumes[bad[0]]))

    local_edges = tets[:, LOCAL_EDGES]
    edges, edge_inv = np.unique(
        np.sort(local_edges, axis=-1).reshape(-1, 2), axis=0, return_inverse=True
    )
    tet_edges = edge_inv.reshape(n_tets, 6)
    tet_edge_signs = np.where(
        local_edges[..., 0] < local_edges[..., 1], 1, -1
    ).astype(np.int8)

    local_faces = tets[:, LOCAL_FACES]
    faces, face_inv = np.unique(
        np.sort(local_faces, axis=-1).reshape(-1, 3), axis=0, return_inverse=True
    )
    tet_faces = face_inv.reshape(n_tets, 4)

    counts = np.bincount(tet_faces.ravel(), minlength=faces.shape[0])
    over = np.flatnonzero(counts > 2)
    if over.size:
        face = tuple(int(x) for x in faces[over[0]])
        raise NonManifoldFace(face, int(counts[over[0]]))  # type: ignore[arg-type]

    order = np.argsort(local_faces, axis=-1)
    perm_lookup = np.full(27, -1, dtype=np.int8)
    for code, perm in enumerate(FACE_PERMUTATIONS):
        perm_lookup[perm[0] * 9 + perm[1] * 3 + perm[2]] = code
    tet_face_perms = perm_lookup[order[..., 0] * 9 + order[..., 1] * 3 + order[..., 2]]

    boundary_faces = counts == 1
    bfaces = faces[boundary_faces]
    boundary_vertices = np.zeros(mesh.vertices.shape[0], dtype=bool)
    boundary_vertices[bfaces.ravel()] = True
    boundary_edges = np.zeros(edges.shape[0], dtype=bool)
    if bfaces.size:
        face_edges = bfaces[:, [[0, 1], [0, 2], [1, 2]]].reshape(-1, 2)
        boundary_edges[_lookup(edges, face_edges, mesh.vertices.shape[0])] = True

    vertices = np.asarray(mesh.vertices, dtype=np.float64)
    _freeze(
        vertices,
        tets,
        edges,
        faces,
        tet_edges,
        tet_edge_signs,
        tet_faces,
        tet_face_perms,
        boundary_vertices,
        boundary_edges,
        boundary_faces,
    )
    completed = replace(
        mesh,
        vertices=vertices,
        tets=tets,
        edges=edges,
        faces=faces,
        tet_edges=tet_edges,
        tet_edge_signs=tet_edge_signs,
        tet_faces=tet_faces,
        tet_face_perms=tet_face_perms,
        boundary_vertices=boundary_vertices,
        boundary_edges=boundary_edges,
        boundary_faces=boundary_faces,
    )
    logger.debug(
        "topology: V={} E={} F={} T={} (boundary faces {})",
        completed.n_vertices,
        completed.n_edges,
        completed.n_faces,
        completed.n_tets,
        int(boundary_faces.sum()),
    )
    return completed


def _cube_template() -> list[tuple[tuple[int, int, int], ...]]:
    """The 12 face triangles of a unit cube as corner offsets."""
    triangles = []
    for axis in range(3):
        d1, d2 = (d for d in range(3) if d != axis)
        for side in (0, 1):

            def corner(a: int, b: int) -> tuple[int, int, int]:
                offset = [0, 0, 0]
                offset[axis] = side
                offset[d1] = a
                offset[d2] = b
                return (offset[0], offset[1], offset[2])

            p00, p10, p11, p01 = corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)
            triangles.append((p00, p10, p11))
            triangles.append((p00, p11, p01))
    return triangles


def _prism_mesh(
    cells_mask: BoolArray, origin: tuple[float, float, float], h: float, domain: Domain
) -> TetMesh:
    m1, m2, m3 = cells_mask.shape
    vertex_mask = np.zeros((m1 + 1, m2 + 1, m3 + 1), dtype=bool)
    for a, b, c in itertools.product((0, 1), repeat=3):
        vertex_mask[a : a + m1, b : b + m2, c : c + m3] |= cells_mask

    grid_index = np.argwhere(vertex_mask)
    grid_id = np.full(vertex_mask.shape, -1, dtype=np.int64)
    grid_id[vertex_mask] = np.arange(grid_index.shape[0])

    cells = np.argwhere(cells_mask)
    n_grid = grid_index.shape[0]
    n_cells = cells.shape[0]
    center_id = n_grid + np.arange(n_cells)

    base = np.asarray(origin, dtype=np.float64)
    vertices = np.concatenate(
        [base + grid_index * h, base + (cells + 0.5) * h], axis=0
    )

    tets = np.empty((n_cells, 12, 4), dtype=np.int64)
    for t, triangle in enumerate(_cube_template()):
        tets[:, t, 0] = center_id
        for j, (a, b, c) in enumerate(triangle):
            corner = cells + np.array([a, b, c])
            tets[:, t, j + 1] = grid_id[corner[:, 0], corner[:, 1], corner[:, 2]]
    tets = tets.reshape(-1, 4)

    negative = signed_volumes(vertices, tets) < 0
    tets[negative, 2], tets[negative, 3] = tets[negative, 3], tets[negative, 2].copy()

    return build_topology(TetMesh(vertices=vertices, tets=tets, h=h, domain=domain))


def build_cube_mesh(n: int) -> TetMesh:
    """Mesh of the unit cube with `n` cubes per direction (h = 1/n)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}.")
    cells_mask = np.ones((n, n, n), dtype=bool)
    return _prism_mesh(cells_mask, (0.0, 0.0, 0.0), 1.0 / n, Domain.CUBE)


def build_thick_l_mesh(n: int) -> TetMesh:
    """Mesh of ((-1,1)^2 minus (-1,0]^2) x (0,1) with h = 1/n."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}.")
    cells_mask = np.ones((2 * n, 2 * n, n), dtype=bool)
    cells_mask[:n, :n, :] = False
    return _prism_mesh(cells_mask, (-1.0, -1.0, 0.0), 1.0 / n, Domain.THICK_L)


def build_mesh(domain: Domain, n: int) -> TetMesh:
    match domain:
        case Domain.CUBE:
            return build_cube_mesh(n)
        case Domain.THICK_L:
            return build_thick_l_mesh(n)
        case _:
            assert False, "This should never happen."


def domain_contains(
    domain: Domain, points: FloatArray, *, tol: float = 1e-12
) -> BoolArray:
    """Closure-membership test for the two supported domains."""
    x = np.asarray(points, dtype=np.float64)
    match domain:
        case Domain.CUBE:
            inside = (x >= -tol) & (x <= 1.0 + tol)
            return np.all(inside, axis=-1)  # type: ignore[no-any-return]
        case Domain.THICK_L:
            in_box = (
                np.all((x[..., :2] >= -1.0 - tol) & (x[..., :2] <= 1.0 + tol), axis=-1)
                & (x[..., 2] >= -tol)
                & (x[..., 2] <= 1.0 + tol)
            )
            notch = (x[..., 0] < -tol) & (x[..., 1] < -tol)
            return in_box & ~notch  # type: ignore[no-any-return]
        case _:
            assert False, "This should never happen."


def domain_bounding_box(domain: Domain) -> tuple[FloatArray, FloatArray]:
    match domain:
        case Domain.CUBE:
            return np.zeros(3), np.ones(3)
        case Domain.THICK_L:
            return np.array([-1.0, -1.0, 0.0]), np.ones(3)
        case _:
            assert False, "This should never happen."

"""Reference elements: first-family Nédélec (orders 0, 1) and Lagrange (1, 2).

Element frame
-------------
Every tetrahedron is used with its vertices in ascending global order. Global
edges then always run from the lower to the higher vertex id and every face is
parametrized from its sorted vertex triple, so the edge and face moments below
are the same functionals seen from both sides of a shared face. No sign or
permutation bookkeeping is needed for conformity. The affine map of that
frame may reverse orientation; measures use `|det J|`.

Degrees of freedom
------------------
Order 0, per edge `(i, j)` with tangent `t = v_j - v_i`: `∫_0^1 u·t ds`.

Order 1, per edge: `∫_0^1 u·t ds` and `∫_0^1 u·t (2s - 1) ds`; per face
`(a, b, c)`: `2∫∫ u·(v_b - v_a)` and `2∫∫ u·(v_c - v_a)` over the parametric
triangle. Local numbering: two DOFs per local edge (`2e`, `2e + 1`), then two
per local face (`12 + 2f`, `12 + 2f + 1`).

The nodal basis is `prime @ inv(D)` where `D` is the DOF matrix of the prime
(Whitney times barycentric) basis.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from maxtev.errors import DegenerateTet, UnsupportedOrder
from maxtev.mesh import LOCAL_EDGES, LOCAL_FACES
from maxtev.quadrature import line_rule, triangle_rule

FloatArray = NDArray[np.float64]
VectorField = Callable[[FloatArray], NDArray[np.generic]]

DET_TOLERANCE = 1e-14

REFERENCE_VERTICES = np.array(
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)
GRAD_LAMBDA = np.array(
    [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)

EDGE_DOFS = {0: 6, 1: 20}
LAGRANGE_DOFS = {1: 4, 2: 10}


def _points(points: FloatArray) -> FloatArray:
    return np.atleast_2d(np.asarray(points, dtype=np.float64))


def barycentric(points: FloatArray) -> FloatArray:
    x = _points(points)
    return np.concatenate([1.0 - x.sum(axis=1, keepdims=True), x], axis=1)


def _check_order(order: int) -> None:
    if order not in EDGE_DOFS:
        raise UnsupportedOrder(order, supported=tuple(EDGE_DOFS))


def _check_lagrange(degree: int) -> None:
    if degree not in LAGRANGE_DOFS:
        raise UnsupportedOrder(degree, supported=tuple(LAGRANGE_DOFS))


# prime basis


def _whitney(lam: FloatArray, i: int, j: int) -> tuple[FloatArray, FloatArray]:
    value = lam[:, i, None] * GRAD_LAMBDA[j] - lam[:, j, None] * GRAD_LAMBDA[i]
    curl = 2.0 * np.cross(GRAD_LAMBDA[i], GRAD_LAMBDA[j])
    return value, np.broadcast_to(curl, value.shape)


def _weighted(
    lam: FloatArray, whitney: tuple[FloatArray, FloatArray], k: int
) -> tuple[FloatArray, FloatArray]:
    # curl(l_k phi) = grad l_k x phi + l_k curl phi
    value, curl = whitney
    return (
        lam[:, k, None] * value,
        np.cross(GRAD_LAMBDA[k], value) + lam[:, k, None] * curl,
    )


def _prime_edge_basis(order: int, points: FloatArray) -> tuple[FloatArray, FloatArray]:
    lam = barycentric(points)
    values: list[FloatArray] = []
    curls: list[FloatArray] = []

    def push(pair: tuple[FloatArray, FloatArray]) -> None:
        values.append(pair[0])
        curls.append(pair[1])

    if order == 0:
        for i, j in LOCAL_EDGES:
            push(_whitney(lam, i, j))
    else:
        for i, j in LOCAL_EDGES:
            phi = _whitney(lam, i, j)
            push(_weighted(lam, phi, i))
            push(_weighted(lam, phi, j))
        for i, j, k in LOCAL_FACES:
            push(_weighted(lam, _whitney(lam, i, j), k))
            push(_weighted(lam, _whitney(lam, i, k), j))

    return np.stack(values, axis=1), np.stack(curls, axis=1)


# degrees of freedom


@dataclass(frozen=True)
class DofSamples:
    """Edge DOFs as weighted tangential samples.

    `dof[d] = sum_s weights[d, s] · u(points[s])` on the reference element.
    """

    points: FloatArray
    weights: FloatArray


@lru_cache(maxsize=None)
def dof_samples(order: int) -> DofSamples:
    _check_order(order)
    line = line_rule(4)
    tri = triangle_rule(4)
    n_dofs = EDGE_DOFS[order]

    points: list[FloatArray] = []
    blocks: list[tuple[int, FloatArray]] = []

    s = line.points[:, 0]
    for e, (i, j) in enumerate(LOCAL_EDGES):
        a, b = REFERENCE_VERTICES[i], REFERENCE_VERTICES[j]
        tangent = b - a
        points.append(a + s[:, None] * tangent)
        moments = [line.weights]
        if order == 1:
            moments.append(line.weights * (2 * s - 1))
        for m, weight in enumerate(moments):
            dof = e if order == 0 else 2 * e + m
            blocks.append((dof, weight[:, None] * tangent))

    if order == 1:
        sr = tri.points
        for f, (i, j, k) in enumerate(LOCAL_FACES):
            a = REFERENCE_VERTICES[i]
            t1 = REFERENCE_VERTICES[j] - a
            t2 = REFERENCE_VERTICES[k] - a
            points.append(a + sr[:, :1] * t1 + sr[:, 1:] * t2)
            for m, tangent in enumerate((t1, t2)):
                blocks.append((12 + 2 * f + m, 2.0 * tri.weights[:, None] * tangent))

    all_points = np.concatenate(points, axis=0)
    weights = np.zeros((n_dofs, all_points.shape[0], 3))
    offset = 0
    sizes = [p.shape[0] for p in points]
    per_entity = 1 if order == 0 else 2
    for entity, size in enumerate(sizes):
        for m in range(per_entity):
            dof, weight = blocks[entity * per_entity + m]
            weights[dof, offset : offset + size] = weight
        offset += size

    all_points.setflags(write=False)
    weights.setflags(write=False)
    return DofSamples(points=all_points, weights=weights)


@lru_cache(maxsize=None)
def reference_dof_matrix(order: int) -> FloatArray:
    """`D[d, m]`: DOF functional `d` applied to prime basis function `m`."""
    samples = dof_samples(order)
    prime, _ = _prime_edge_basis(order, samples.points)
    matrix = np.einsum("dsa,sma->dm", samples.weights, prime)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=None)
def _nodal_coefficients(order: int) -> FloatArray:
    coefficients = np.linalg.inv(reference_dof_matrix(order))
    coefficients.setflags(write=False)
    return coefficients


# evaluators


def eval_edge_basis(order: int, points: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Nodal edge basis on the reference element.

    Returns:
        `(values, curls)`, both with shape `(P, n_dofs, 3)`.

    Raises:
        UnsupportedOrder: for orders other than 0 and 1.
    """
    _check_order(order)
    values, curls = _prime_edge_basis(order, _points(points))
    if order == 0:
        return values, curls
    c = _nodal_coefficients(order)
    return (
        np.einsum("pma,mj->pja", values, c),
        np.einsum("pma,mj->pja", curls, c),
    )


def eval_lagrange_basis(
    degree: int, points: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Lagrange basis: vertex functions, then edge midpoints (degree 2).

    Returns:
        `(values, gradients)` with shapes `(P, n)` and `(P, n, 3)`.
    """
    _check_lagrange(degree)
    lam = barycentric(points)
    n_points = lam.shape[0]
    grads = np.broadcast_to(GRAD_LAMBDA, (n_points, 4, 3))
    if degree == 1:
        return lam, np.array(grads)

    vertex_values = lam * (2.0 * lam - 1.0)
    vertex_grads = (4.0 * lam - 1.0)[:, :, None] * grads
    edge_values = np.stack(
        [4.0 * lam[:, i] * lam[:, j] for i, j in LOCAL_EDGES], axis=1
    )
    edge_grads = np.stack(
        [
            4.0 * (lam[:, i, None] * GRAD_LAMBDA[j] + lam[:, j, None] * GRAD_LAMBDA[i])
            for i, j in LOCAL_EDGES
        ],
        axis=1,
    )
    return (
        np.concatenate([vertex_values, edge_values], axis=1),
        np.concatenate([vertex_grads, edge_grads], axis=1),
    )


@dataclass(frozen=True)
class ReferenceBasis:
    family: Literal["edge", "lagrange"]
    order: int
    n_dofs: int

    def evaluate(self, points: FloatArray) -> tuple[FloatArray, FloatArray]:
        if self.family == "edge":
            return eval_edge_basis(self.order, points)
        return eval_lagrange_basis(self.order, points)


def reference_basis(family: Literal["edge", "lagrange"], order: int) -> ReferenceBasis:
    if family == "edge":
        _check_order(order)
        return ReferenceBasis(family, order, EDGE_DOFS[order])
    _check_lagrange(order)
    return ReferenceBasis(family, order, LAGRANGE_DOFS[order])


@lru_cache(maxsize=None)
def local_gradient_matrix(order: int) -> FloatArray:
    """Edge DOFs of the gradients of the degree `order + 1` Lagrange basis.

    Independent of the element: the DOFs are invariant under the covariant map.
    Entries below 1e-14 are flushed to zero.
    """
    samples = dof_samples(order)
    _, grads = eval_lagrange_basis(order + 1, samples.points)
    matrix = np.einsum("dsa,sja->dj", samples.weights, grads)
    matrix[np.abs(matrix) < 1e-14] = 0.0
    matrix.setflags(write=False)
    return matrix


# geometry


@dataclass(frozen=True)
class TetGeometry:
    """Affine maps `x = J x̂ + origin` of a batch of tetrahedra."""

    origin: FloatArray
    jacobian: FloatArray
    det: FloatArray
    inv_t: FloatArray

    @property
    def measure(self) -> FloatArray:
        return np.abs(self.det)  # type: ignore[no-any-return]

    @property
    def volume(self) -> FloatArray:
        return self.measure / 6.0  # type: ignore[no-any-return]

    def __len__(self) -> int:
        return int(self.det.shape[0])

    def subset(self, index: slice | NDArray[np.int64]) -> TetGeometry:
        return TetGeometry(
            origin=self.origin[index],
            jacobian=self.jacobian[index],
            det=self.det[index],
            inv_t=self.inv_t[index],
        )

    def map_points(self, points: FloatArray) -> FloatArray:
        """Reference points `(P, 3)` to physical points `(T, P, 3)`."""
        mapped = np.einsum("tab,pb->tpa", self.jacobian, _points(points))
        return self.origin[:, None, :] + mapped  # type: ignore[no-any-return]


def tet_geometry(vertices: FloatArray) -> TetGeometry:
    """Geometry of tetrahedra given as `(T, 4, 3)` vertex coordinates.

    Raises:
        DegenerateTet: if `|det J| < 1e-14` for some tetrahedron.
    """
    p = np.asarray(vertices, dtype=np.float64).reshape(-1, 4, 3)
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=-1)
    det = np.linalg.det(jac)
    small = np.flatnonzero(np.abs(det) < DET_TOLERANCE)
    if small.size:
        raise DegenerateTet(float(det[small[0]]))
    inv_t = np.transpose(np.linalg.inv(jac), (0, 2, 1))
    return TetGeometry(origin=p[:, 0], jacobian=jac, det=det, inv_t=inv_t)


def push_forward(
    geometry: TetGeometry, values: FloatArray, curls: FloatArray | None = None
) -> tuple[FloatArray, FloatArray | None]:
    """Covariant transform of reference vector fields.

    `u = J^{-T} û` and `curl u = J curl̂ û / det J`. The same transform maps
    reference Lagrange gradients to physical gradients; scalar values need no
    transform.

    Args:
        geometry: `T` tetrahedra.
        values: reference values `(P, n, 3)`.
        curls: reference curls `(P, n, 3)`, optional.

    Returns:
        Physical values and curls with shape `(T, P, n, 3)`.
    """
    phys = np.einsum("tab,pnb->tpna", geometry.inv_t, values)
    if curls is None:
        return phys, None
    phys_curls = np.einsum("tab,pnb->tpna", geometry.jacobian, curls) / geometry.det[
        :, None, None, None
    ]
    return phys, phys_curls


def interpolate_edge(
    order: int, geometry: TetGeometry, function: VectorField
) -> NDArray[np.generic]:
    """Element edge DOFs `(T, n_dofs)` of a vector field given in physical space.

    `function` maps points `(..., 3)` to vectors `(..., 3)`.
    """
    samples = dof_samples(order)
    points = geometry.map_points(samples.points)
    values = np.asarray(function(points))
    # physical tangents are J t̂
    tangents = np.einsum("tab,dsb->tdsa", geometry.jacobian, samples.weights)
    return np.einsum("tdsa,tsa->td", tangents, values)  # type: ignore[no-any-return]

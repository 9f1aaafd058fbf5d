"""Sparse assembly of the forms a, b, c and of the saddle-point pencil.

Convention: `(u, v) = ∫ u·conj(v)`, test functions in the conjugated slot, so
entry `(i, j)` of a matrix is the form evaluated at trial `j` and test `i`.

Per-field matrices are integrated tet by tet with one vectorized `einsum` per
chunk of tetrahedra; coupled matrices are obtained with the 0/1 prolongations
of the coupled spaces:

    a = P_wᵀ S_A P_w - P_vᵀ S_I P_v
    c = P_wᵀ M_N P_w - P_vᵀ M_I P_v
    b = P_wᵀ X_N R_p - P_vᵀ X_I R_q

`S` are curl-curl matrices, `M` edge mass matrices and `X` mixed matrices with
Lagrange gradients as trial functions.
"""
from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from loguru import logger
from numpy.typing import NDArray

from maxtev.coefficients import CoefficientField, constant_field
from maxtev.dof_spaces import (
    CoupledFieldSpace,
    MultiplierSpace,
    build_coupled_field_space,
    build_gradient_matrix,
    build_multiplier_space,
    space_geometry,
)
from maxtev.elements import eval_edge_basis, eval_lagrange_basis, push_forward
from maxtev.errors import DimensionMismatch, SpaceMismatch
from maxtev.io import atomic_path
from maxtev.mesh import TetMesh
from maxtev.quadrature import quadrature_rule
from maxtev.types import FieldComponent

ComplexArray = NDArray[np.complex128]
SparseMatrix = sp.csr_matrix

DEFAULT_QUADRATURE_DEGREE = 8
CHUNK_SIZE = 256

_IDENTITY = constant_field(1.0, label="I")


def _chunks(n: int, size: int = CHUNK_SIZE) -> list[slice]:
    return [slice(start, min(start + size, n)) for start in range(0, n, size)]


def _field_matrix(
    space: CoupledFieldSpace,
    coefficient: CoefficientField,
    kind: str,
    degree: int,
    trial: MultiplierSpace | None = None,
) -> SparseMatrix:
    """Per-field matrix of `∫ X u_j · conj(φ_i)`.

    `kind` is `curl` (curls of edge functions), `mass` (edge functions) or
    `mixed` (edge tests, Lagrange gradient trials from `trial`).
    """
    rule = quadrature_rule(degree)
    edge_values, edge_curls = eval_edge_basis(space.order, rule.points)
    if kind == "mixed":
        assert trial is not None
        _, trial_grads = eval_lagrange_basis(trial.degree, rule.points)
        col_dofs = trial.field.cell_dofs
        n_cols = trial.field.dim
    else:
        col_dofs = space.field.cell_dofs
        n_cols = space.field.dim
    row_dofs = space.field.cell_dofs

    geometry = space_geometry(space)
    rows: list[NDArray[np.int64]] = []
    cols: list[NDArray[np.int64]] = []
    vals: list[ComplexArray] = []
    symmetric = kind != "mixed"

    for chunk in _chunks(len(geometry)):
        sub = geometry.subset(chunk)
        points = sub.map_points(rule.points)
        weights = sub.measure[:, None] * rule.weights[None, :]
        coef = coefficient(points)
        phi, curls = push_forward(sub, edge_values, edge_curls)
        match kind:
            case "curl":
                test = trial_fn = curls
            case "mass":
                test = trial_fn = phi
            case "mixed":
                test = phi
                trial_fn, _ = push_forward(sub, trial_grads)
            case _:
                assert False, "This should never happen."
        assert trial_fn is not None and test is not None
        local = np.einsum("tq,tqia,tqab,tqjb->tij", weights, test, coef, trial_fn)
        if symmetric:
            local = (local + np.conj(np.swapaxes(local, 1, 2))) / 2.0
        r = row_dofs[chunk]
        c = col_dofs[chunk]
        rows.append(np.repeat(r[:, :, None], c.shape[1], axis=2).ravel())
        cols.append(np.repeat(c[:, None, :], r.shape[1], axis=1).ravel())
        vals.append(local.ravel())

    # COO -> CSR sums duplicates in a fixed order
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.field.dim, n_cols),
    ).tocsr()


def _coupled(
    space: CoupledFieldSpace, w_block: SparseMatrix, v_block: SparseMatrix
) -> SparseMatrix:
    p_w = space.prolongation(FieldComponent.W)
    p_v = space.prolongation(FieldComponent.V)
    return (p_w.T @ w_block @ p_w - p_v.T @ v_block @ p_v).tocsr()


def assemble_a(
    H: CoupledFieldSpace,
    A: CoefficientField,
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE,
) -> SparseMatrix:
    """The a-block: `(A curl ω, curl ω′) - (curl υ, curl υ′)`."""
    started = time.perf_counter()
    s_a = _field_matrix(H, A, "curl", quadrature_degree)
    s_i = _field_matrix(H, _IDENTITY, "curl", quadrature_degree)
    result = _coupled(H, s_a, s_i)
    elapsed = time.perf_counter() - started
    logger.debug("assembled a ({}) in {:.2f}s", A.label, elapsed)
    return result


def assemble_c(
    H: CoupledFieldSpace,
    N: CoefficientField,
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE,
) -> SparseMatrix:
    """`c((ω, υ), (ω′, υ′)) = (N ω, ω′) - (υ, υ′)`."""
    started = time.perf_counter()
    m_n = _field_matrix(H, N, "mass", quadrature_degree)
    m_i = _field_matrix(H, _IDENTITY, "mass", quadrature_degree)
    result = _coupled(H, m_n, m_i)
    elapsed = time.perf_counter() - started
    logger.debug("assembled c ({}) in {:.2f}s", N.label, elapsed)
    return result


def assemble_b(
    Q: MultiplierSpace,
    H: CoupledFieldSpace,
    N: CoefficientField,
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE,
) -> SparseMatrix:
    """`b((p′, q′), (ω′, υ′)) = (N ∇p′, ω′) - (∇q′, υ′)`, `(dim H, dim Q)`.

    Raises:
        SpaceMismatch: for spaces on different meshes or incompatible orders.
    """
    if Q.mesh is not H.mesh:
        raise SpaceMismatch(
            "Multiplier and field spaces are built on different meshes."
        )
    if Q.degree != H.order + 1:
        raise SpaceMismatch(
            f"Lagrange degree {Q.degree} does not match edge order {H.order}."
        )
    x_n = _field_matrix(H, N, "mixed", quadrature_degree, trial=Q)
    x_i = _field_matrix(H, _IDENTITY, "mixed", quadrature_degree, trial=Q)
    p_w = H.prolongation(FieldComponent.W)
    p_v = H.prolongation(FieldComponent.V)
    return (p_w.T @ x_n @ Q.restriction_p - p_v.T @ x_i @ Q.restriction_q).tocsr()


def assemble_curl_energy(
    H: CoupledFieldSpace, quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE
) -> SparseMatrix:
    """Gram matrix of `‖curl w‖² + ‖curl v‖²` on coupled coefficients."""
    s_i = _field_matrix(H, _IDENTITY, "curl", quadrature_degree)
    p_w = H.prolongation(FieldComponent.W)
    p_v = H.prolongation(FieldComponent.V)
    return (p_w.T @ s_i @ p_w + p_v.T @ s_i @ p_v).tocsr()


def assemble_mass_gram(
    H: CoupledFieldSpace, quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE
) -> SparseMatrix:
    """Gram matrix of `‖w‖² + ‖v‖²` on coupled coefficients."""
    m_i = _field_matrix(H, _IDENTITY, "mass", quadrature_degree)
    p_w = H.prolongation(FieldComponent.W)
    p_v = H.prolongation(FieldComponent.V)
    return (p_w.T @ m_i @ p_w + p_v.T @ m_i @ p_v).tocsr()


def assemble_field_mass(
    H: CoupledFieldSpace,
    coefficient: CoefficientField,
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE,
) -> SparseMatrix:
    """Single-field edge mass matrix weighted by `coefficient`."""
    return _field_matrix(H, coefficient, "mass", quadrature_degree)


@dataclass(frozen=True)
class Pencil:
    """`K = [A B; Bᴴ 0]`, `M = [C 0; 0 0]`."""

    K: SparseMatrix
    M: SparseMatrix
    n_field: int
    n_mult: int

    @property
    def dim(self) -> int:
        return self.n_field + self.n_mult

    @property
    def A(self) -> SparseMatrix:
        return self.K[: self.n_field, : self.n_field]

    @property
    def B(self) -> SparseMatrix:
        return self.K[: self.n_field, self.n_field :]

    @property
    def C(self) -> SparseMatrix:
        return self.M[: self.n_field, : self.n_field]


def build_pencil(A: SparseMatrix, B: SparseMatrix, C: SparseMatrix) -> Pencil:
    """Raises:
    DimensionMismatch: if the block shapes are inconsistent.
    """
    n_field = A.shape[0]
    if A.shape != (n_field, n_field) or C.shape != (n_field, n_field):
        raise DimensionMismatch(
            f"A {A.shape} and C {C.shape} must be square of the same size."
        )
    if B.shape[0] != n_field:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {n_field}.")
    n_mult = B.shape[1]
    K = sp.bmat([[A, B], [B.conj().T, None]], format="csr", dtype=np.complex128)
    M = sp.block_diag(
        [C, sp.csr_matrix((n_mult, n_mult))], format="csr", dtype=np.complex128
    )
    return Pencil(K=K, M=M, n_field=n_field, n_mult=n_mult)


RightHandSide = (
    Callable[[NDArray[np.float64]], NDArray[np.generic]] | NDArray[np.generic]
)


@dataclass(frozen=True, eq=False)
class TransmissionProblem:
    """A discretized transmission eigenproblem and everything built for it."""

    mesh: TetMesh
    order: int
    A_field: CoefficientField
    N_field: CoefficientField
    H: CoupledFieldSpace
    Q: MultiplierSpace
    A: SparseMatrix
    B: SparseMatrix
    C: SparseMatrix
    pencil: Pencil
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE
    labels: dict[str, str] = field(default_factory=dict)

    @cached_property
    def G(self) -> SparseMatrix:
        return build_gradient_matrix(self.Q, self.H)

    @cached_property
    def curl_energy(self) -> SparseMatrix:
        return assemble_curl_energy(self.H, self.quadrature_degree)

    @cached_property
    def mass_gram(self) -> SparseMatrix:
        return assemble_mass_gram(self.H, self.quadrature_degree)

    @cached_property
    def field_mass_N(self) -> SparseMatrix:
        return assemble_field_mass(self.H, self.N_field, self.quadrature_degree)

    @cached_property
    def field_mass_I(self) -> SparseMatrix:
        return assemble_field_mass(self.H, _IDENTITY, self.quadrature_degree)


def assemble_transmission_problem(
    mesh: TetMesh,
    order: int,
    A: CoefficientField,
    N: CoefficientField,
    *,
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE,
    pinned_vertex: int | None = None,
) -> TransmissionProblem:
    """Spaces, blocks and pencil for one mesh, order and coefficient pair."""
    started = time.perf_counter()
    H = build_coupled_field_space(mesh, order)
    Q = build_multiplier_space(mesh, order + 1, pinned_vertex=pinned_vertex)
    a = assemble_a(H, A, quadrature_degree)
    b = assemble_b(Q, H, N, quadrature_degree)
    c = assemble_c(H, N, quadrature_degree)
    pencil = build_pencil(a, b, c)
    logger.debug(
        "pencil: n_field={} n_mult={} nnz(K)={} in {:.2f}s",
        pencil.n_field,
        pencil.n_mult,
        pencil.K.nnz,
        time.perf_counter() - started,
    )
    return TransmissionProblem(
        mesh=mesh,
        order=order,
        A_field=A,
        N_field=N,
        H=H,
        Q=Q,
        A=a,
        B=b,
        C=c,
        pencil=pencil,
        quadrature_degree=quadrature_degree,
    )


def _load_vector(
    problem: TransmissionProblem,
    data: RightHandSide,
    coefficient: CoefficientField,
    mass: Callable[[], SparseMatrix],
) -> ComplexArray:
    """`∫ X data · φ_i` for a callable, `mass @ data` for edge coefficients."""
    if not callable(data):
        return np.asarray(mass() @ np.asarray(data), dtype=np.complex128)

    H = problem.H
    rule = quadrature_rule(problem.quadrature_degree)
    ref_values, _ = eval_edge_basis(H.order, rule.points)
    geometry = space_geometry(H)
    result = np.zeros(H.field.dim, dtype=np.complex128)
    for chunk in _chunks(len(geometry)):
        sub = geometry.subset(chunk)
        phi, _ = push_forward(sub, ref_values)
        points = sub.map_points(rule.points)
        weights = sub.measure[:, None] * rule.weights[None, :]
        values = np.asarray(data(points))
        local = np.einsum(
            "tq,tqab,tqb,tqia->ti", weights, coefficient(points), values, phi
        )
        np.add.at(result, H.field.cell_dofs[chunk], local)
    return result


def assemble_rhs(
    problem: TransmissionProblem, f: RightHandSide, g: RightHandSide
) -> ComplexArray:
    """Load vector `c((f, g), (ω′, υ′)) = (N f, ω′) - (g, υ′)`.

    `f` and `g` are callables on physical points `(..., 3) -> (..., 3)` or
    per-field edge coefficient vectors.
    """
    H = problem.H
    f_load = _load_vector(problem, f, problem.N_field, lambda: problem.field_mass_N)
    g_load = _load_vector(problem, g, _IDENTITY, lambda: problem.field_mass_I)
    p_w = H.prolongation(FieldComponent.W)
    p_v = H.prolongation(FieldComponent.V)
    return np.asarray(p_w.T @ f_load - p_v.T @ g_load, dtype=np.complex128)


def write_matrix_market(
    matrix: SparseMatrix, path: str | Path, comment: str = ""
) -> None:
    """MatrixMarket coordinate (complex general) dump."""
    with atomic_path(path) as tmp, tmp.open("wb") as fh:
        scipy.io.mmwrite(
            fh,
            sp.coo_matrix(matrix, dtype=np.complex128),
            comment=comment,
            field="complex",
            symmetry="general",
        )

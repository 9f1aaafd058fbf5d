"""Generalized eigenproblem `K x = λ M x` near a shift.

The pencil is Hermitian but indefinite and `M` is singular, so ARPACK's
generalized modes do not apply. The shift-inverted operator
`x -> (K - σM)⁻¹ M x` is wrapped in a `LinearOperator` and handed to `eigs`:
its dominant Ritz values `θ` give `λ = σ + 1/θ`, while the infinite eigenvalues
of the singular `M` block collapse to `θ ≈ 0`.
"""
from __future__ import annotations

import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla
from loguru import logger
from numpy.typing import NDArray

from maxtev.assembly import Pencil
from maxtev.config import SolverSettings
from maxtev.errors import (
    DimensionTooLarge,
    FactorizationFailed,
    NoConvergence,
    NoEigenvaluesInWindow,
)

ComplexArray = NDArray[np.complex128]

RITZ_CUTOFF = 1e-10
DEDUPLICATION_TOLERANCE = 1e-10
RANK_TOLERANCE = 1e-6
CONJUGATE_TOLERANCE = 1e-8
REAL_TOLERANCE = 1e-8
INFINITE_BETA = 1e-12
DENSE_LIMIT = 3000


@dataclass(frozen=True)
class EigenRecord:
    lam: complex
    k: complex
    eigvec: ComplexArray
    residual: float
    constraint_violation: float
    multiplier_ratio: float
    conjugate_pair: bool = False

    def field_block(self, n_field: int) -> ComplexArray:
        return self.eigvec[:n_field]


@dataclass(frozen=True)
class EigenResult:
    records: tuple[EigenRecord, ...]
    shift: complex
    n_field: int
    n_requested: int
    n_ritz: int
    n_discarded: int
    retries: int = 0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def k_values(self) -> list[complex]:
        return [r.k for r in self.records]


def transmission_k(lam: complex) -> complex:
    """Principal square root: `Re k >= 0`, and `Im k >= 0` when `Re k = 0`."""
    k = complex(np.sqrt(complex(lam)))
    if k.real == 0.0 and k.imag < 0.0:
        k = -k
    return k


def _factorize(pencil: Pencil, shift: complex) -> spla.SuperLU:
    shifted = (pencil.K - shift * pencil.M).tocsc()
    try:
        lu = spla.splu(shifted)
    except RuntimeError as err:
        raise FactorizationFailed(shift, str(err)) from err
    diag = np.abs(lu.U.diagonal())
    if not np.all(np.isfinite(diag)) or diag.min() == 0.0:
        raise FactorizationFailed(shift, "zero pivot")
    return lu


def _residual(pencil: Pencil, lam: complex, x: ComplexArray) -> float:
    kx = pencil.K @ x
    mx = pencil.M @ x
    scale = np.linalg.norm(kx) + abs(lam) * np.linalg.norm(mx)
    if scale == 0.0:
        return float("inf")
    return float(np.linalg.norm(kx - lam * mx) / scale)


def _record(pencil: Pencil, lam: complex, x: ComplexArray) -> EigenRecord:
    n = pencil.n_field
    field, mult = x[:n], x[n:]
    field_norm = np.linalg.norm(field)
    safe = field_norm if field_norm > 0 else 1.0
    return EigenRecord(
        lam=lam,
        k=transmission_k(lam),
        eigvec=x,
        residual=_residual(pencil, lam, x),
        constraint_violation=float(np.linalg.norm(pencil.B.conj().T @ field) / safe),
        multiplier_ratio=float(np.linalg.norm(mult) / safe),
    )


def _sort_key(record: EigenRecord) -> tuple[float, float]:
    return (record.k.real, record.k.imag)


def _same_pair(record: EigenRecord, other: EigenRecord) -> bool:
    tol = DEDUPLICATION_TOLERANCE * max(abs(record.lam), 1.0)
    if abs(record.lam - other.lam) > tol:
        return False
    # a repeated eigenvalue keeps one record per independent eigenvector
    stacked = np.column_stack([record.eigvec, other.eigvec])
    return bool(np.linalg.matrix_rank(stacked, tol=RANK_TOLERANCE) < 2)


def _deduplicate(records: Iterable[EigenRecord]) -> list[EigenRecord]:
    kept: list[EigenRecord] = []
    for record in sorted(records, key=lambda r: r.residual):
        if not any(_same_pair(record, other) for other in kept):
            kept.append(record)
    return kept


def _merge_conjugates(records: list[EigenRecord]) -> list[EigenRecord]:
    """Report each conjugate pair once, with `Im k >= 0`."""
    result: list[EigenRecord] = []
    used: set[int] = set()
    for i, record in enumerate(records):
        if i in used:
            continue
        lam = record.lam
        if abs(lam.imag) <= REAL_TOLERANCE * max(abs(lam), 1.0):
            result.append(record)
            continue
        partner = None
        for j in range(i + 1, len(records)):
            other = records[j].lam
            close = abs(other - lam.conjugate()) <= CONJUGATE_TOLERANCE * abs(lam)
            if j not in used and close:
                partner = j
                break
        if partner is None:
            result.append(record)
            continue
        used.add(partner)
        pair = [record, records[partner]]
        chosen = max(pair, key=lambda r: r.k.imag)
        result.append(replace(chosen, conjugate_pair=True))
    return result


def shift_invert_solve(
    pencil: Pencil,
    shift: complex,
    nev: int,
    tol: float = 1e-10,
    *,
    residual_tol: float = 1e-8,
    ncv: int | None = None,
    max_iterations: int | None = None,
) -> EigenResult:
    """Eigenvalues of the pencil nearest `shift`.

    Ritz values with `|θ| < 1e-10` are discarded (infinite eigenvalues), Ritz
    values closer than 1e-10 relative are merged only when their eigenvectors
    are parallel, and pairs whose residual `‖Kx - λMx‖ / (‖Kx‖ + |λ|‖Mx‖)`
    exceeds `residual_tol` are dropped. Conjugate pairs count once, repeated
    eigenvalues once per independent eigenvector.

    Raises:
        FactorizationFailed: if `K - σM` is singular at `shift` and at the
            perturbed shift `σ(1 + 1e-6) + 1e-6i`.
        NoConvergence: if fewer than `nev` eigenvalues meet the residual
            contract; the partial result is attached.
    """
    if nev < 1:
        raise ValueError("nev must be at least 1.")
    started = time.perf_counter()
    retries = 0
    try:
        lu = _factorize(pencil, shift)
    except FactorizationFailed as err:
        perturbed = shift * (1 + 1e-6) + 1e-6j
        logger.warning("{}; retrying at sigma={:.8g}", err, perturbed)
        shift, retries = perturbed, 1
        lu = _factorize(pencil, shift)
    logger.debug("factorized K - sigma*M in {:.2f}s", time.perf_counter() - started)

    dim = pencil.dim
    M = pencil.M

    def matvec(x: ComplexArray) -> ComplexArray:
        return np.asarray(lu.solve(np.asarray(M @ x, dtype=np.complex128)))

    operator = spla.LinearOperator((dim, dim), matvec=matvec, dtype=np.complex128)
    # conjugate partners and window filtering need spare Ritz values
    k = min(2 * nev + 2, dim - 2)
    ncv = min(max(ncv or 4 * nev + 20, 2 * k + 1), dim)
    # fixed start vector, repeated runs give identical Ritz values
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    try:
        theta, vectors = spla.eigs(
            operator,
            k=k,
            which="LM",
            v0=v0,
            tol=tol,
            ncv=ncv,
            maxiter=max_iterations,
        )
    except spla.ArpackNoConvergence as err:
        logger.warning("Arnoldi stopped early: {} Ritz values", len(err.eigenvalues))
        theta, vectors = err.eigenvalues, err.eigenvectors

    finite = np.abs(theta) >= RITZ_CUTOFF
    records = [
        _record(
            pencil,
            complex(shift + 1.0 / t),
            vectors[:, i] / np.linalg.norm(vectors[:, i]),
        )
        for i, t in enumerate(theta)
        if finite[i]
    ]
    converged = [r for r in records if r.residual <= residual_tol]
    if len(converged) < len(records):
        logger.warning(
            "dropped {} Ritz pairs above residual {:.1e}",
            len(records) - len(converged),
            residual_tol,
        )
    merged = _merge_conjugates(_deduplicate(converged))
    merged.sort(key=lambda r: abs(r.lam - shift))
    merged = sorted(merged[:nev], key=_sort_key)

    result = EigenResult(
        records=tuple(merged),
        shift=shift,
        n_field=pencil.n_field,
        n_requested=nev,
        n_ritz=len(theta),
        n_discarded=int((~finite).sum()) + len(records) - len(converged),
        retries=retries,
    )
    logger.debug(
        "shift-invert at sigma={:.6g}: {} eigenvalues in {:.2f}s",
        shift,
        len(result),
        time.perf_counter() - started,
    )
    if len(merged) < nev:
        raise NoConvergence(nev, len(merged), result)
    return result


def solve_window(
    pencil: Pencil,
    k_window: Sequence[float],
    settings: SolverSettings | None = None,
    *,
    spare: int = 4,
) -> EigenResult:
    """Eigenvalues with `Re k` in `k_window`.

    The shift defaults to the squared window midpoint; `nev + spare` pairs are
    computed around it before filtering.

    Raises:
        NoEigenvaluesInWindow: if no eigenvalue falls in the window.
    """
    settings = settings or SolverSettings()
    low, high = k_window
    shift = settings.shift if settings.shift is not None else ((low + high) / 2) ** 2
    wanted = settings.nev + spare
    try:
        result = shift_invert_solve(
            pencil,
            shift,
            wanted,
            settings.tol,
            residual_tol=settings.residual_tol,
            ncv=settings.ncv,
            max_iterations=settings.max_iterations,
        )
    except NoConvergence as err:
        if err.result is None:
            raise
        result = err.result

    inside = tuple(r for r in result.records if low <= r.k.real <= high)
    if not inside:
        raise NoEigenvaluesInWindow(
            f"No eigenvalue with Re k in [{low}, {high}] near sigma={shift:.6g}."
        )
    return replace(result, records=inside)


def select_lowest(
    result: EigenResult | Sequence[EigenRecord], count: int
) -> list[EigenRecord]:
    """The `count` lowest records by `Re k` (ties by `Im k`).

    Raises:
        NoEigenvaluesInWindow: if there is nothing to select from.
    """
    records = list(result.records if isinstance(result, EigenResult) else result)
    if not records:
        raise NoEigenvaluesInWindow("Empty eigenvalue set.")
    return sorted(records, key=_sort_key)[:count]


@dataclass(frozen=True)
class DenseSpectrum:
    lam: ComplexArray
    n_infinite: int

    @property
    def k(self) -> ComplexArray:
        return np.array([transmission_k(x) for x in self.lam])

    def lowest(self, count: int, *, merge_conjugates: bool = True) -> ComplexArray:
        """Lowest `count` values of k, conjugate pairs once with `Im k >= 0`."""
        k = self.k
        if merge_conjugates:
            k = k[k.imag >= -REAL_TOLERANCE * np.maximum(np.abs(k), 1.0)]
            k = np.where(np.abs(k.imag) <= REAL_TOLERANCE * np.abs(k), k.real, k)
        order = np.lexsort((k.imag, k.real))
        return k[order][:count]  # type: ignore[no-any-return]


def dense_qz(pencil: Pencil, *, limit: int = DENSE_LIMIT) -> DenseSpectrum:
    """All finite generalized eigenvalues of a small pencil.

    Infinite eigenvalues are those with `|β| < 1e-12` after normalizing each
    homogeneous pair `(α, β)` to unit length.

    Raises:
        DimensionTooLarge: if the pencil dimension exceeds `limit`.
    """
    if pencil.dim > limit:
        raise DimensionTooLarge(pencil.dim, limit)
    w = scipy.linalg.eig(
        pencil.K.toarray(), pencil.M.toarray(), right=False, homogeneous_eigvals=True
    )
    alpha, beta = w[0], w[1]
    norm = np.hypot(np.abs(alpha), np.abs(beta))
    norm[norm == 0.0] = 1.0
    alpha, beta = alpha / norm, beta / norm
    finite = np.abs(beta) >= INFINITE_BETA
    lam = alpha[finite] / beta[finite]
    return DenseSpectrum(lam=lam, n_infinite=int((~finite).sum()))

"""Convergence studies: h-sweeps, extrapolated references and observed rates.

A study solves one transmission eigenproblem per mesh parameter `n` and keeps
the lowest eigenvalues `k_{j,h}` in the configured window. References come from
explicit values, from a companion solve on a finer mesh with quadratic
elements, or from the extrapolation formula

    k_j ≈ k_{j,h_end} - mean_i(C_i) h_endᵖ,
    k_{j,h_i} - k_{j,h_{i+1}} = C_i (h_iᵖ - h_{i+1}ᵖ)

with `p = 2(k+1)` for edge elements of order `k`.
"""
from __future__ import annotations

import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from maxtev.assembly import assemble_transmission_problem
from maxtev.coefficients import CoefficientField, coefficient_from_config
from maxtev.config import RunConfig
from maxtev.dof_spaces import CoupledFieldSpace, evaluate_field
from maxtev.eigensolver import select_lowest, solve_window
from maxtev.errors import (
    DegenerateError,
    InsufficientData,
    MaxtevError,
    StudyError,
)
from maxtev.io import write_csv, write_mesh_vtk
from maxtev.mesh import build_mesh
from maxtev.types import Domain, FieldComponent

# |k_j - k_{j,h}| at or below this (relative) has no meaningful logarithm
UNDERFLOW = 1e-14
MISSING_RATE = "--"


@dataclass(frozen=True)
class Experiment:
    domain: Domain
    order: int
    A: str
    N: str
    k_window: tuple[float, float]


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    h: float
    dofs: int
    k: tuple[complex, ...]
    elapsed: float = 0.0


@dataclass(frozen=True)
class ConvergenceTable:
    """Per-h eigenvalues of one experiment, coarsest mesh first."""

    experiment: Experiment
    records: tuple[ConvergenceRecord, ...]
    references: tuple[complex, ...] | None = None
    rates: tuple[tuple[float | None, ...], ...] = field(default=())

    @property
    def sizes(self) -> list[float]:
        return [r.h for r in self.records]

    @property
    def n_values(self) -> int:
        return max((len(r.k) for r in self.records), default=0)

    def column(self, j: int) -> list[complex]:
        return [r.k[j] if j < len(r.k) else complex("nan") for r in self.records]

    def fieldnames(self) -> list[str]:
        names = ["n", "h", "dofs"]
        for j in range(1, self.n_values + 1):
            names += [f"re_k{j}", f"im_k{j}", f"rate_k{j}"]
        return names

    def rows(self) -> list[dict[str, str]]:
        rows = []
        for i, record in enumerate(self.records):
            row = {
                "n": str(record.n),
                "h": f"{record.h:.10g}",
                "dofs": str(record.dofs),
            }
            for j in range(self.n_values):
                k = record.k[j] if j < len(record.k) else None
                rate = self.rates[j][i] if self.rates else None
                row[f"re_k{j + 1}"] = f"{k.real:.8f}" if k is not None else ""
                row[f"im_k{j + 1}"] = f"{k.imag:.8f}" if k is not None else ""
                rate_text = f"{rate:.4f}" if rate is not None else MISSING_RATE
                row[f"rate_k{j + 1}"] = rate_text
            rows.append(row)
        if self.references is not None:
            row = {"n": "ref", "h": "0", "dofs": ""}
            for j, k in enumerate(self.references[: self.n_values]):
                row[f"re_k{j + 1}"] = f"{k.real:.8f}"
                row[f"im_k{j + 1}"] = f"{k.imag:.8f}"
                row[f"rate_k{j + 1}"] = ""
            rows.append(row)
        return rows


def _check_sizes(sizes: Sequence[float]) -> None:
    if any(b >= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("Mesh sizes must be strictly decreasing.")


def extrapolate_reference(
    values: Sequence[complex], sizes: Sequence[float], p: float = 4
) -> complex:
    """Estimate the limit of `values` converging like `hᵖ`.

    Raises:
        InsufficientData: with fewer than three values.
    """
    if len(values) != len(sizes):
        raise ValueError("values and sizes differ in length.")
    if len(values) < 3:
        raise InsufficientData(f"Extrapolation needs 3 values, got {len(values)}.")
    _check_sizes(sizes)
    k = np.asarray(values, dtype=np.complex128)
    hp = np.asarray(sizes, dtype=np.float64) ** p
    C = (k[:-1] - k[1:]) / (hp[:-1] - hp[1:])
    return complex(k[-1] - C.mean() * hp[-1])


def compute_rates(
    values: Sequence[complex],
    sizes: Sequence[float],
    reference: complex,
    *,
    strict: bool = True,
) -> list[float | None]:
    """Observed rate for each consecutive pair, `None` for the first mesh.

    Raises:
        DegenerateError: if `|reference - k_h|` underflows and `strict` is set;
            otherwise the affected rates are `None`.
    """
    if len(values) != len(sizes):
        raise ValueError("values and sizes differ in length.")
    _check_sizes(sizes)
    scale = max(abs(reference), 1.0)
    errors: list[float | None] = []
    for value in values:
        error = abs(reference - value)
        if math.isnan(error):
            errors.append(None)
        elif error <= UNDERFLOW * scale:
            if strict:
                raise DegenerateError(
                    f"|k - k_h| = {error:.3e} at reference {reference:.10g}."
                )
            errors.append(None)
        else:
            errors.append(error)

    rates: list[float | None] = [None]
    for i in range(1, len(values)):
        prev, cur = errors[i - 1], errors[i]
        if prev is None or cur is None:
            rates.append(None)
            continue
        rates.append(
            (math.log(cur) - math.log(prev))
            / (math.log(sizes[i]) - math.log(sizes[i - 1]))
        )
    return rates


def _solve_lowest(
    config: RunConfig,
    n: int,
    order: int,
    A: CoefficientField,
    N: CoefficientField,
) -> ConvergenceRecord:
    assert config.domain is not None and config.k_window is not None
    log = logger.bind(domain=config.domain.value, n=n, order=order)
    started = time.perf_counter()
    mesh = build_mesh(config.domain, n)
    problem = assemble_transmission_problem(
        mesh,
        order,
        A,
        N,
        quadrature_degree=config.quadrature_degree,
        pinned_vertex=config.pinned_vertex,
    )
    result = solve_window(problem.pencil, config.k_window, config.solver)
    records = select_lowest(result, config.solver.nev)
    elapsed = time.perf_counter() - started
    log.info(
        "n={} dofs={}: k={} ({:.1f}s)",
        n,
        problem.H.dim,
        ", ".join(f"{r.k:.6f}" for r in records),
        elapsed,
    )
    return ConvergenceRecord(
        n=n,
        h=mesh.h,
        dofs=problem.H.dim,
        k=tuple(r.k for r in records),
        elapsed=elapsed,
    )


def _references(
    config: RunConfig,
    records: Sequence[ConvergenceRecord],
    A: CoefficientField,
    N: CoefficientField,
) -> tuple[complex, ...] | None:
    if config.reference_values is not None:
        return tuple(config.reference_values)
    if config.reference_n is not None:
        logger.info("companion reference: n={} order=1", config.reference_n)
        try:
            companion = _solve_lowest(config, config.reference_n, 1, A, N)
        except MaxtevError as err:
            raise StudyError(config.reference_n, err) from err
        return companion.k
    if len(records) < 3:
        logger.warning("fewer than 3 meshes: no reference, rates are not computed")
        return None
    sizes = [r.h for r in records]
    p = 2 * (config.order + 1)
    n_values = min(len(r.k) for r in records)
    return tuple(
        extrapolate_reference([r.k[j] for r in records], sizes, p)
        for j in range(n_values)
    )


def run_convergence(config: RunConfig) -> ConvergenceTable:
    """One eigen-solve per mesh parameter, then references and rates.

    Solves for different `n` run concurrently on at most `config.threads`
    threads; the table is ordered by `n` regardless.

    Raises:
        StudyError: wrapping the first failing solve, with its `n`.
    """
    if config.domain is None or config.k_window is None:
        raise ValueError("A convergence study needs a domain and a k-window.")
    ns = sorted(config.n_values)
    A = coefficient_from_config(config.A)
    N = coefficient_from_config(config.N)
    experiment = Experiment(
        domain=config.domain,
        order=config.order,
        A=A.label,
        N=N.label,
        k_window=(config.k_window[0], config.k_window[1]),
    )
    logger.info(
        "convergence study {} order={} A={} N={} n={}",
        experiment.domain.value,
        experiment.order,
        experiment.A,
        experiment.N,
        ns,
    )

    with ThreadPoolExecutor(max_workers=min(config.threads, len(ns))) as pool:
        futures = {
            n: pool.submit(_solve_lowest, config, n, config.order, A, N) for n in ns
        }
        records = []
        for n in ns:
            try:
                records.append(futures[n].result())
            except MaxtevError as err:
                for future in futures.values():
                    future.cancel()
                raise StudyError(n, err) from err

    references = _references(config, records, A, N)
    rates: tuple[tuple[float | None, ...], ...] = ()
    if references is not None:
        sizes = [r.h for r in records]
        width = max(len(r.k) for r in records)
        columns = []
        for j in range(width):
            column = [r.k[j] if j < len(r.k) else complex("nan") for r in records]
            if j < len(references):
                rate = compute_rates(column, sizes, references[j], strict=False)
                columns.append(tuple(rate))
            else:
                columns.append((None,) * len(records))
        rates = tuple(columns)
    return ConvergenceTable(
        experiment=experiment,
        records=tuple(records),
        references=references,
        rates=rates,
    )


def write_table_csv(table: ConvergenceTable, path: str | Path) -> None:
    write_csv(path, table.rows(), table.fieldnames())


def cell_field(
    space: CoupledFieldSpace,
    x: NDArray[np.generic],
    which: FieldComponent | str,
) -> NDArray[np.float64]:
    """Real part of a component at tet barycenters, scaled to max |entry| = 1."""
    barycenter = np.full((1, 3), 0.25)
    values = evaluate_field(space, x, which, barycenter)[:, 0, :].real
    peak = np.abs(values).max() if values.size else 0.0
    return values / peak if peak > 0 else values  # type: ignore[no-any-return]


def export_fields(
    space: CoupledFieldSpace,
    x: NDArray[np.generic],
    which: FieldComponent | str,
    path: str | Path,
) -> None:
    """Write one eigenfunction component as per-tet VTK cell data.

    Each Cartesian component is a scalar array `<which>_1..3`; the vector is
    stored as `<which>` too.

    Raises:
        SpaceMismatch: if `x` does not belong to `space`.
    """
    which = FieldComponent(which)
    values = cell_field(space, x, which)
    data = {which.value: values}
    data.update({f"{which.value}_{i + 1}": values[:, i] for i in range(3)})
    write_mesh_vtk(space.mesh, path, data)
    logger.info("exported {} of {} tets to {}", which.value, space.mesh.n_tets, path)

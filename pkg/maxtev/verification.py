"""Numerical property checks of the discretization.

Every check returns a [`PropertyReport`][maxtev.verification.PropertyReport]
holding what was observed next to the thresholds it was judged against. Checks
that need dense linear algebra refuse pencils above `DENSE_LIMIT` unknowns.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger
from numpy.typing import NDArray

from maxtev.assembly import (
    DEFAULT_QUADRATURE_DEGREE,
    TransmissionProblem,
    assemble_rhs,
    assemble_transmission_problem,
)
from maxtev.coefficients import (
    CoefficientField,
    estimate_bounds,
    make_preset,
    t_variant,
)
from maxtev.config import SolverSettings
from maxtev.dof_spaces import coupled_t_operator
from maxtev.eigensolver import (
    DENSE_LIMIT,
    EigenRecord,
    dense_qz,
    select_lowest,
    shift_invert_solve,
)
from maxtev.errors import (
    CaseUnsupported,
    DimensionTooLarge,
    NoCaseMatch,
    SingularSystem,
)
from maxtev.mesh import TetMesh, build_mesh
from maxtev.types import Domain, Form

ComplexArray = NDArray[np.complex128]

DEGRADATION = 0.5
SOURCE_TOLERANCE = 1e-9
B_EQUALS_CG_TOLERANCE = 1e-11
AG_TOLERANCE = 1e-12
HERMITIAN_TOLERANCE = 1e-12
ORACLE_TOLERANCE = 1e-9
PINNED_TOLERANCE = 1e-9
MIN_ABS_LAMBDA = 0.1

# coefficient settings of the experiments: (A, N) preset names
SETTINGS: dict[int, tuple[str, str]] = {
    1: ("two_I", "sixteen_I"),
    2: ("F1", "F2"),
    3: ("F4", "F3"),
}

# k-windows of the lowest eigenvalues per domain and setting
WINDOWS: dict[Domain, dict[int, tuple[float, float]]] = {
    Domain.CUBE: {1: (1.0, 1.6), 2: (4.2, 5.0), 3: (3.7, 4.6)},
    Domain.THICK_L: {1: (0.7, 1.2), 2: (3.0, 3.5), 3: (2.5, 3.5)},
}


@dataclass(frozen=True)
class PropertyReport:
    name: str
    meshes: tuple[str, ...]
    observed: dict[str, float]
    thresholds: dict[str, float]
    passed: bool
    details: str = ""
    per_mesh: tuple[float, ...] = field(default=())

    def rows(self) -> list[dict[str, str]]:
        """Flat rows, one per observation, for CSV output."""
        return [
            {
                "property": self.name,
                "meshes": " ".join(self.meshes),
                "quantity": key,
                "observed": f"{value:.6e}",
                "threshold": (
                    f"{self.thresholds[key]:.6e}" if key in self.thresholds else ""
                ),
                "passed": str(self.passed),
                "details": self.details,
            }
            for key, value in self.observed.items()
        ]


def mesh_label(problem: TransmissionProblem) -> str:
    domain = problem.mesh.domain.value if problem.mesh.domain else "mesh"
    return f"{domain}/n={round(1 / problem.mesh.h)}/k={problem.order}"


def _as_list(
    problems: TransmissionProblem | Sequence[TransmissionProblem],
) -> list[TransmissionProblem]:
    if isinstance(problems, TransmissionProblem):
        return [problems]
    return list(problems)


def _max_abs(matrix: sp.spmatrix | ComplexArray) -> float:
    if sp.issparse(matrix):
        data = matrix.tocsr().data
        return float(np.abs(data).max()) if data.size else 0.0
    return float(np.abs(matrix).max()) if np.size(matrix) else 0.0


def _sweep_report(
    name: str,
    labels: list[str],
    values: list[float],
    details: str,
    minimum: float = 0.0,
) -> PropertyReport:
    coarsest = values[0]
    worst = min(values)
    ratio = worst / coarsest if coarsest > 0 else 0.0
    passed = worst > minimum and ratio >= DEGRADATION
    return PropertyReport(
        name=name,
        meshes=tuple(labels),
        observed={"coarsest": coarsest, "minimum": worst, "degradation": ratio},
        thresholds={"minimum": minimum, "degradation": DEGRADATION},
        passed=passed,
        details=details,
        per_mesh=tuple(values),
    )


def check_t_coercivity(
    form: Form | str,
    problems: TransmissionProblem | Sequence[TransmissionProblem],
    trials: int = 200,
    *,
    seed: int = 0,
) -> PropertyReport:
    """Minimum of `|(Tx)ᴴ X x| / seminorm(x)²` over random coupled vectors.

    `X` is the a-block (seminorm: curl energy of both fields) or the c-block
    (seminorm: L² mass of both fields). `T` is chosen from the bound case of
    the coefficients. One value per problem, coarsest mesh first.

    Raises:
        CaseUnsupported: if the coefficients match no admissible case.
    """
    form = Form(form)
    sweep = _as_list(problems)
    rng = np.random.default_rng(seed)
    labels: list[str] = []
    values: list[float] = []
    variant = None
    for problem in sweep:
        try:
            case = estimate_bounds(
                problem.A_field, problem.N_field, problem.mesh.domain or Domain.CUBE
            ).case
        except NoCaseMatch as err:
            raise CaseUnsupported(err.bounds) from err
        variant = t_variant(form, case)
        T = coupled_t_operator(problem.H, variant)
        X = problem.A if form is Form.A else problem.C
        S = problem.curl_energy if form is Form.A else problem.mass_gram

        dim = problem.H.dim
        x = rng.standard_normal((dim, trials)) + 1j * rng.standard_normal((dim, trials))
        numerator = np.abs(np.einsum("ij,ij->j", np.conj(T @ x), X @ x))
        denominator = np.einsum("ij,ij->j", np.conj(x), S @ x).real
        values.append(float((numerator / denominator).min()))
        labels.append(mesh_label(problem))
        logger.debug("T-coercivity {} {}: {:.4g}", form.value, labels[-1], values[-1])

    return _sweep_report(
        f"t-coercivity-{form.value}",
        labels,
        values,
        details=f"T={variant.value if variant else ''}",
    )


def poincare_constant(
    problem: TransmissionProblem, *, limit: int = DENSE_LIMIT
) -> tuple[float, float]:
    """Smallest curl-energy / mass quotient on `{Bᴴx = 0}` and without it.

    Raises:
        DimensionTooLarge: if the field dimension exceeds `limit`.
    """
    n = problem.H.dim
    if n > limit:
        raise DimensionTooLarge(n, limit)
    S = problem.curl_energy.toarray()
    Mg = problem.mass_gram.toarray()
    Z = scipy.linalg.null_space(problem.B.conj().T.toarray())
    constrained = scipy.linalg.eigh(
        Z.conj().T @ S @ Z, Z.conj().T @ Mg @ Z, eigvals_only=True
    )
    unconstrained = scipy.linalg.eigh(S, Mg, eigvals_only=True)
    return float(constrained.min()), float(unconstrained.min())


def check_discrete_poincare(
    problems: TransmissionProblem | Sequence[TransmissionProblem],
    *,
    limit: int = DENSE_LIMIT,
) -> PropertyReport:
    """Discrete Poincaré constants on the constrained space across a sweep.

    The unconstrained quotient of the finest mesh is reported too: it vanishes
    (discrete gradients have no curl), which shows the constraint is active.
    """
    sweep = _as_list(problems)
    labels: list[str] = []
    values: list[float] = []
    free: list[float] = []
    for problem in sweep:
        constrained, unconstrained = poincare_constant(problem, limit=limit)
        labels.append(mesh_label(problem))
        values.append(constrained)
        free.append(unconstrained)
    report = _sweep_report("discrete-poincare", labels, values, details="")
    observed = dict(report.observed, unconstrained=max(free))
    return PropertyReport(
        name=report.name,
        meshes=report.meshes,
        observed=observed,
        thresholds=report.thresholds,
        passed=report.passed,
        per_mesh=report.per_mesh,
    )


def _solve_sparse(K: sp.spmatrix, rhs: ComplexArray) -> ComplexArray:
    try:
        return np.asarray(spla.splu(K.tocsc()).solve(rhs))
    except RuntimeError as err:
        raise SingularSystem(f"Sparse factorization failed: {err}") from err


def check_source_consistency(
    problem: TransmissionProblem, *, seed: int = 0, limit: int = DENSE_LIMIT
) -> PropertyReport:
    """Solve the discrete source problem `K [x; y] = [c((f, g), ·); 0]`.

    Checks that the multiplier equals the gradient subproblem solution
    `(Gᴴ C G) y = Gᴴ F`, that it vanishes once the gradient part of the data
    is projected out, and that sparse and dense solves agree. Zero data gives
    a zero solution and the solution is linear in the data.

    Raises:
        SingularSystem: if the saddle-point system cannot be factorized.
        DimensionTooLarge: above `limit` unknowns.
    """
    pencil = problem.pencil
    if pencil.dim > limit:
        raise DimensionTooLarge(pencil.dim, limit)
    n = pencil.n_field
    rng = np.random.default_rng(seed)
    m = problem.H.field.dim
    f = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    g = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    F = assemble_rhs(problem, f, g)
    rhs = np.concatenate([F, np.zeros(pencil.n_mult, dtype=np.complex128)])

    sparse = _solve_sparse(pencil.K, rhs)
    try:
        dense = scipy.linalg.solve(pencil.K.toarray(), rhs)
    except scipy.linalg.LinAlgError as err:
        raise SingularSystem(f"Dense solve failed: {err}") from err

    scale = np.linalg.norm(sparse)
    G = problem.G
    gram = (G.conj().T @ problem.C @ G).toarray()
    y_gradient = scipy.linalg.solve(gram, G.conj().T @ F)
    multiplier_error = np.linalg.norm(sparse[n:] - y_gradient) / max(
        np.linalg.norm(y_gradient), 1e-300
    )

    projected = F - problem.C @ (G @ y_gradient)
    rhs_projected = np.concatenate([projected, np.zeros(pencil.n_mult)])
    solution_projected = _solve_sparse(pencil.K, rhs_projected)
    projected_multiplier = np.linalg.norm(solution_projected[n:]) / max(
        np.linalg.norm(solution_projected[:n]), 1e-300
    )

    zero = _solve_sparse(pencil.K, np.zeros_like(rhs))
    doubled = _solve_sparse(pencil.K, 2.0 * rhs)

    observed = {
        "sparse_dense": float(np.linalg.norm(sparse - dense) / scale),
        "multiplier_gradient_subproblem": float(multiplier_error),
        "projected_multiplier": float(projected_multiplier),
        "zero_data": float(np.linalg.norm(zero)),
        "linearity": float(np.linalg.norm(doubled - 2.0 * sparse) / scale),
    }
    thresholds = {key: SOURCE_TOLERANCE for key in observed}
    return PropertyReport(
        name="source-consistency",
        meshes=(mesh_label(problem),),
        observed=observed,
        thresholds=thresholds,
        passed=all(observed[k] <= thresholds[k] for k in observed),
    )


def check_matrix_identities(problem: TransmissionProblem) -> PropertyReport:
    """`B = C·G`, `A·G = 0` and Hermiticity of A, C, K, M."""
    G = problem.G
    b_scale = max(_max_abs(problem.B), 1e-300)
    a_scale = max(_max_abs(problem.A), 1e-300)
    observed = {
        "B_minus_CG": _max_abs(problem.B - problem.C @ G) / b_scale,
        "AG": _max_abs(problem.A @ G) / a_scale,
        "M_hermitian": _max_abs(problem.pencil.M - problem.pencil.M.conj().T)
        / max(_max_abs(problem.pencil.M), 1e-300),
        "C_hermitian": _max_abs(problem.C - problem.C.conj().T)
        / max(_max_abs(problem.C), 1e-300),
    }
    thresholds = {
        "B_minus_CG": B_EQUALS_CG_TOLERANCE,
        "AG": AG_TOLERANCE,
        "M_hermitian": HERMITIAN_TOLERANCE,
        "C_hermitian": HERMITIAN_TOLERANCE,
    }
    K = problem.pencil.K
    observed["A_hermitian"] = _max_abs(problem.A - problem.A.conj().T) / a_scale
    observed["K_hermitian"] = _max_abs(K - K.conj().T) / max(_max_abs(K), 1e-300)
    thresholds["A_hermitian"] = thresholds["K_hermitian"] = HERMITIAN_TOLERANCE
    return PropertyReport(
        name="matrix-identities",
        meshes=(mesh_label(problem),),
        observed=observed,
        thresholds=thresholds,
        passed=all(observed[k] <= thresholds[k] for k in observed),
        details=f"{problem.A_field.label}/{problem.N_field.label}",
    )


def _nearest(
    problem: TransmissionProblem,
    shift: complex,
    count: int,
    settings: SolverSettings | None,
) -> list[EigenRecord]:
    settings = settings or SolverSettings()
    result = shift_invert_solve(
        problem.pencil,
        shift,
        count,
        settings.tol,
        residual_tol=settings.residual_tol,
        ncv=settings.ncv,
        max_iterations=settings.max_iterations,
    )
    return select_lowest(result, count)


def check_oracle_equivalence(
    problem: TransmissionProblem,
    shift: complex,
    count: int = 4,
    settings: SolverSettings | None = None,
) -> PropertyReport:
    """Shift-invert eigenvalues against the dense QZ spectrum.

    Also reports the smallest finite `|λ|` and how far the dense spectrum is
    from being closed under conjugation.
    """
    spectrum = dense_qz(problem.pencil)
    records = _nearest(problem, shift, count, settings)
    mismatch = 0.0
    for record in records:
        for lam in (record.lam, record.lam.conjugate()):
            nearest = np.abs(spectrum.lam - lam).min() / abs(lam)
            mismatch = max(mismatch, float(nearest))
            if not record.conjugate_pair:
                break
    closure = max(
        (
            float(np.abs(spectrum.lam - lam.conjugate()).min() / abs(lam))
            for lam in spectrum.lam
        ),
        default=0.0,
    )
    observed = {
        "shift_invert_vs_dense": mismatch,
        "min_abs_lambda": float(np.abs(spectrum.lam).min()),
        "conjugate_closure": closure,
    }
    passed = (
        mismatch <= ORACLE_TOLERANCE
        and observed["min_abs_lambda"] > MIN_ABS_LAMBDA
        and closure <= ORACLE_TOLERANCE
    )
    return PropertyReport(
        name="oracle-equivalence",
        meshes=(mesh_label(problem),),
        observed=observed,
        thresholds={
            "shift_invert_vs_dense": ORACLE_TOLERANCE,
            "min_abs_lambda": MIN_ABS_LAMBDA,
            "conjugate_closure": ORACLE_TOLERANCE,
        },
        passed=passed,
    )


def check_pinned_vertex_invariance(
    mesh: TetMesh,
    order: int,
    A: CoefficientField,
    N: CoefficientField,
    shift: complex,
    *,
    count: int = 4,
    settings: SolverSettings | None = None,
    quadrature_degree: int = DEFAULT_QUADRATURE_DEGREE,
) -> PropertyReport:
    """Lowest k with the default pinned vertex and with the last boundary vertex."""
    boundary = np.flatnonzero(np.asarray(mesh.boundary_vertices))
    ks = []
    for pinned in (int(boundary[0]), int(boundary[-1])):
        problem = assemble_transmission_problem(
            mesh, order, A, N, quadrature_degree=quadrature_degree, pinned_vertex=pinned
        )
        records = _nearest(problem, shift, count, settings)
        ks.append(np.array([r.k for r in records]))
    size = min(len(ks[0]), len(ks[1]))
    change = float(np.max(np.abs(ks[0][:size] - ks[1][:size]) / np.abs(ks[0][:size])))
    return PropertyReport(
        name="pinned-vertex-invariance",
        meshes=(mesh_label(problem),),
        observed={"relative_change": change},
        thresholds={"relative_change": PINNED_TOLERANCE},
        passed=change <= PINNED_TOLERANCE,
        details=f"pinned {int(boundary[0])} vs {int(boundary[-1])}",
    )


def run_all_checks(
    max_n: int = 3,
    *,
    domains: Iterable[Domain] = (Domain.CUBE, Domain.THICK_L),
    orders: Iterable[int] = (0, 1),
    settings: Iterable[int] = (1, 2, 3),
    solver: SolverSettings | None = None,
) -> list[PropertyReport]:
    """Every check for every domain, order and coefficient setting.

    Sweeps run over `n = 1..max_n`; the dense checks (Poincaré, source problem,
    oracle, pinned vertex) only see meshes whose pencil fits `DENSE_LIMIT`.
    """
    reports: list[PropertyReport] = []
    for domain in domains:
        for order in orders:
            sizes = list(range(1, max_n + 1))
            meshes = {n: build_mesh(domain, n) for n in sizes}
            for setting in settings:
                a_name, n_name = SETTINGS[setting]
                A, N = make_preset(a_name), make_preset(n_name)
                logger.info(
                    "verify {} k={} setting {} on n={}",
                    domain.value,
                    order,
                    setting,
                    sizes,
                )
                problems = [
                    assemble_transmission_problem(meshes[n], order, A, N)
                    for n in sizes
                ]
                reports.extend(check_matrix_identities(p) for p in problems)
                reports.append(check_t_coercivity(Form.A, problems))
                reports.append(check_t_coercivity(Form.C, problems))
                dense = [p for p in problems if p.pencil.dim <= DENSE_LIMIT]
                if dense:
                    reports.append(check_discrete_poincare(dense))
                    reports.append(check_source_consistency(dense[0]))
                    low, high = WINDOWS[domain][setting]
                    shift = ((low + high) / 2) ** 2
                    reports.append(
                        check_oracle_equivalence(dense[0], shift, settings=solver)
                    )
                    reports.append(
                        check_pinned_vertex_invariance(
                            dense[0].mesh, order, A, N, shift, settings=solver
                        )
                    )
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.warning("{} of {} checks failed: {}", len(failed), len(reports), failed)
    return reports

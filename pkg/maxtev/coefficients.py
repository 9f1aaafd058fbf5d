"""Material tensors `A` and `N`, their presets and bound cases.

A coefficient maps physical points `(..., 3)` to complex `(..., 3, 3)`
matrices. Bounds `A_* <= ξ̄·Aξ/|ξ|² <= A^*` are estimated by sampling the
extreme eigenvalues on a regular grid of the closed
domain plus a scrambled Sobol cloud.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from scipy.stats import qmc

from maxtev.errors import NoCaseMatch, NotHermitian, UnknownPreset
from maxtev.mesh import domain_bounding_box, domain_contains
from maxtev.types import CoefficientKind, Domain, Form, TVariant

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]
Evaluator = Callable[[FloatArray], ComplexArray]

HERMITIAN_TOLERANCE = 1e-14


@dataclass(frozen=True)
class CoefficientField:
    label: str
    kind: CoefficientKind
    function: Evaluator

    def __call__(self, points: FloatArray) -> ComplexArray:
        return self.function(np.asarray(points, dtype=np.float64))


def _scalar_times_identity(func: Callable[[FloatArray], FloatArray]) -> Evaluator:
    def evaluate(points: FloatArray) -> ComplexArray:
        scalar = np.asarray(func(points), dtype=np.complex128)
        return scalar[..., None, None] * np.eye(3)  # type: ignore[no-any-return]

    return evaluate


def constant_field(
    value: float | Sequence[float] | NDArray[np.generic], label: str | None = None
) -> CoefficientField:
    """A constant coefficient: a scalar (times identity) or a 3×3 matrix.

    Nine numbers are read in row-major order.

    Raises:
        NotHermitian: if the matrix is not Hermitian.
    """
    array = np.asarray(value, dtype=np.complex128)
    if array.size == 1:
        scalar = complex(array.ravel()[0])
        return CoefficientField(
            label=label or f"{scalar.real:g}I",
            kind=CoefficientKind.CONSTANT_SCALAR,
            function=_scalar_times_identity(lambda x: np.full(x.shape[:-1], scalar)),
        )

    matrix = array.reshape(3, 3)
    if not np.allclose(matrix, matrix.conj().T, rtol=0.0, atol=HERMITIAN_TOLERANCE):
        raise NotHermitian(f"Constant coefficient {matrix.tolist()} is not Hermitian.")

    def evaluate(points: FloatArray) -> ComplexArray:
        return np.broadcast_to(matrix, points.shape[:-1] + (3, 3)).copy()

    return CoefficientField(
        label=label or "constant",
        kind=CoefficientKind.MATRIX_FUNCTION,
        function=evaluate,
    )


def _f3(x: FloatArray) -> ComplexArray:
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    out = np.zeros(x.shape[:-1] + (3, 3), dtype=np.complex128)
    out[..., 0, 0] = 16.0
    out[..., 1, 1] = 16.0
    out[..., 2, 2] = 14.0
    out[..., 0, 1] = out[..., 1, 0] = x1
    out[..., 0, 2] = out[..., 2, 0] = x2
    out[..., 1, 2] = out[..., 2, 1] = x3
    return out


def _f4(x: FloatArray) -> ComplexArray:
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    out = np.zeros(x.shape[:-1] + (3, 3), dtype=np.complex128)
    off = 3 * x1 / 8 - 3 * x2 / 8 - 3 * x1**2 / 8 + 3 / 4
    out[..., 0, 0] = -(x1**2) / 8 + 9 * x1 / 8 - 9 * x2 / 8 + 65 / 4
    out[..., 0, 1] = out[..., 1, 0] = off
    out[..., 1, 1] = 9 * x1**2 / 8 - x1 / 8 + x2 / 8 + 55 / 4
    out[..., 2, 2] = x3**2 + 12
    return out


def make_preset(name: str) -> CoefficientField:
    """Coefficient presets of the numerical experiments.

    `F4` is symmetric: its (1,2) and (2,1) entries are both
    `3x1/8 - 3x2/8 - 3x1²/8 + 3/4`.

    Raises:
        UnknownPreset: for unknown names.
    """
    match name:
        case "I":
            return constant_field(1.0, label="I")
        case "two_I":
            return constant_field(2.0, label="2I")
        case "sixteen_I":
            return constant_field(16.0, label="16I")
        case "F1":
            return CoefficientField(
                label="F1*I",
                kind=CoefficientKind.SCALAR_FUNCTION,
                function=_scalar_times_identity(lambda x: np.exp(x.sum(axis=-1)) + 6.0),
            )
        case "F2":
            return CoefficientField(
                label="F2*I",
                kind=CoefficientKind.SCALAR_FUNCTION,
                function=_scalar_times_identity(
                    lambda x: 8.0 + x[..., 0] - x[..., 1] + x[..., 2]
                ),
            )
        case "F3":
            return CoefficientField("F3", CoefficientKind.MATRIX_FUNCTION, _f3)
        case "F4":
            return CoefficientField("F4", CoefficientKind.MATRIX_FUNCTION, _f4)
        case _:
            raise UnknownPreset(name, PRESET_NAMES)


PRESET_NAMES = ["I", "two_I", "sixteen_I", "F1", "F2", "F3", "F4"]


def coefficient_from_config(value: str | Sequence[float]) -> CoefficientField:
    """Preset name, one number or nine row-major numbers."""
    if isinstance(value, str):
        return make_preset(value)
    return constant_field(list(value))


# sampling


def sample_points(
    domain: Domain, *, density: int = 8, sobol_log2: int = 10, seed: int = 0
) -> FloatArray:
    """Regular grid (spacing `1/density`, closure included) plus Sobol points."""
    low, high = domain_bounding_box(domain)
    axes = [
        np.linspace(lo, hi, int(round((hi - lo) * density)) + 1)
        for lo, hi in zip(low, high)
    ]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    cloud = qmc.scale(
        qmc.Sobol(d=3, scramble=True, seed=seed).random_base2(sobol_log2), low, high
    )
    points = np.concatenate([grid, cloud], axis=0)
    return points[domain_contains(domain, points)]  # type: ignore[no-any-return]


def check_hermitian(field: CoefficientField, points: FloatArray) -> float:
    """Largest `|X - X^H|` entry over `points`."""
    values = field(points)
    return float(np.abs(values - np.conj(np.swapaxes(values, -1, -2))).max())


def eigenvalue_range(
    field: CoefficientField, points: FloatArray
) -> tuple[float, float]:
    eig = np.linalg.eigvalsh(field(points))
    return float(eig.min()), float(eig.max())


@dataclass(frozen=True)
class BoundEstimate:
    A_lower: float
    A_upper: float
    N_lower: float
    N_upper: float

    @property
    def case(self) -> int:
        """Admissible case 1..4.

        Raises:
            NoCaseMatch: if the bounds of `A` or `N` straddle 1.
        """
        a_above = self.A_lower > 1.0
        a_below = self.A_upper < 1.0
        n_above = self.N_lower > 1.0
        n_below = self.N_upper < 1.0
        if a_above and n_above:
            return 1
        if a_above and n_below:
            return 2
        if a_below and n_below:
            return 3
        if a_below and n_above:
            return 4
        raise NoCaseMatch(self)


def estimate_bounds(
    A: CoefficientField,
    N: CoefficientField,
    domain: Domain,
    *,
    density: int = 8,
    extra_points: FloatArray | None = None,
) -> BoundEstimate:
    """Sampled extreme eigenvalues of `A` and `N`.

    Raises:
        NotHermitian: if a field is not Hermitian at the samples.
        NoCaseMatch: if a field is not positive definite at the samples.
    """
    points = sample_points(domain, density=density)
    if extra_points is not None:
        points = np.concatenate([points, np.asarray(extra_points).reshape(-1, 3)])

    for field in (A, N):
        deviation = check_hermitian(field, points)
        if deviation > HERMITIAN_TOLERANCE * max(1.0, np.abs(field(points)).max()):
            raise NotHermitian(f"{field.label} deviates by {deviation:.3e}.")

    a_lo, a_hi = eigenvalue_range(A, points)
    n_lo, n_hi = eigenvalue_range(N, points)
    bounds = BoundEstimate(A_lower=a_lo, A_upper=a_hi, N_lower=n_lo, N_upper=n_hi)
    if a_lo <= 0.0 or n_lo <= 0.0:
        raise NoCaseMatch(bounds)
    logger.debug("bounds of {} / {} on {}: {}", A.label, N.label, domain.value, bounds)
    return bounds


def classify_bounds(
    A: CoefficientField, N: CoefficientField, domain: Domain, density: int = 8
) -> int:
    """Case 1..4 of the sampled bounds.

    See [`BoundEstimate.case`][maxtev.coefficients.BoundEstimate.case].
    """
    return estimate_bounds(A, N, domain, density=density).case


def t_variant(form: Form, case: int) -> TVariant:
    """Which isomorphism makes `form` coercive in `case`.

    `a` depends on `A` (`A_* > 1` in cases 1, 2), `c` on `N` (`N_* > 1` in
    cases 1, 4).
    """
    if case not in (1, 2, 3, 4):
        raise ValueError(f"Unknown case {case}.")
    above = case in (1, 2) if form is Form.A else case in (1, 4)
    return TVariant.W_2W_MINUS_V if above else TVariant.W_MINUS_2V

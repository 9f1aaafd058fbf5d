import numpy as np
import pytest

from maxtev.coefficients import (
    PRESET_NAMES,
    BoundEstimate,
    check_hermitian,
    classify_bounds,
    coefficient_from_config,
    constant_field,
    estimate_bounds,
    make_preset,
    sample_points,
    t_variant,
)
from maxtev.errors import NoCaseMatch, NotHermitian, UnknownPreset
from maxtev.types import CoefficientKind, Domain, Form, TVariant

ORIGIN = np.zeros((1, 3))


def test_f1_at_origin() -> None:
    assert np.allclose(make_preset("F1")(ORIGIN)[0], 7.0 * np.eye(3))


def test_f2() -> None:
    x = np.array([[0.5, 0.25, 1.0]])
    assert np.allclose(make_preset("F2")(x)[0], 9.25 * np.eye(3))


def test_f3_at_origin() -> None:
    assert np.allclose(make_preset("F3")(ORIGIN)[0], np.diag([16.0, 16.0, 14.0]))


def test_f3_off_diagonal() -> None:
    value = make_preset("F3")(np.array([[0.1, 0.2, 0.3]]))[0]
    assert value[0, 1] == value[1, 0] == pytest.approx(0.1)
    assert value[0, 2] == value[2, 0] == pytest.approx(0.2)
    assert value[1, 2] == value[2, 1] == pytest.approx(0.3)


def test_f4_symmetric() -> None:
    x1, x2, x3 = 0.3, 0.7, 0.1
    value = make_preset("F4")(np.array([[x1, x2, x3]]))[0]
    off = 3 * x1 / 8 - 3 * x2 / 8 - 3 * x1**2 / 8 + 3 / 4

    assert value[0, 1] == value[1, 0] == pytest.approx(off)
    assert value[0, 0] == pytest.approx(-(x1**2) / 8 + 9 * x1 / 8 - 9 * x2 / 8 + 65 / 4)
    assert value[1, 1] == pytest.approx(9 * x1**2 / 8 - x1 / 8 + x2 / 8 + 55 / 4)
    assert value[2, 2] == pytest.approx(x3**2 + 12)
    assert value[0, 2] == value[1, 2] == 0


def test_f4_eigenvalues_at_origin() -> None:
    eig = np.linalg.eigvalsh(make_preset("F4")(ORIGIN)[0])

    spread = np.hypot(1.25, 0.75)
    assert eig == pytest.approx([12.0, 15.0 - spread, 15.0 + spread])


@pytest.mark.parametrize("name", PRESET_NAMES)
@pytest.mark.parametrize("domain", list(Domain))
def test_presets_hermitian_positive(name: str, domain: Domain) -> None:
    field = make_preset(name)
    points = sample_points(domain, density=4)

    assert points.shape[0] >= 1000
    assert check_hermitian(field, points) <= 1e-14
    assert np.linalg.eigvalsh(field(points)).min() > 0


def test_unknown_preset() -> None:
    with pytest.raises(UnknownPreset):
        make_preset("F5")


def test_constant_field() -> None:
    field = constant_field([2, 1, 0, 1, 2, 0, 0, 0, 3])
    value = field(np.zeros((4, 2, 3)))

    assert value.shape == (4, 2, 3, 3)
    assert value[3, 1, 0, 1] == 1.0
    assert field.kind is CoefficientKind.MATRIX_FUNCTION


def test_constant_field_not_hermitian() -> None:
    with pytest.raises(NotHermitian):
        constant_field([1, 2, 0, 0, 1, 0, 0, 0, 1])


def test_coefficient_from_config() -> None:
    assert coefficient_from_config("two_I").label == "2I"
    scalar = coefficient_from_config([0.5])
    assert scalar.kind is CoefficientKind.CONSTANT_SCALAR
    assert np.allclose(scalar(ORIGIN)[0], 0.5 * np.eye(3))


def test_bounds_constant() -> None:
    bounds = estimate_bounds(
        make_preset("two_I"), make_preset("sixteen_I"), Domain.CUBE
    )
    assert isinstance(bounds, BoundEstimate)
    assert (bounds.A_lower, bounds.A_upper) == pytest.approx((2.0, 2.0))
    assert (bounds.N_lower, bounds.N_upper) == pytest.approx((16.0, 16.0))
    assert bounds.case == 1


def test_bounds_f4_f3() -> None:
    bounds = estimate_bounds(make_preset("F4"), make_preset("F3"), Domain.CUBE)

    assert bounds.A_lower == pytest.approx(12.0)
    assert bounds.N_lower > 1.0
    assert bounds.case == 1


@pytest.mark.parametrize(
    "A, N, case",
    [
        (2.0, 16.0, 1),
        (2.0, 0.5, 2),
        (0.5, 0.25, 3),
        (0.25, 4.0, 4),
    ],
)
def test_classify_constant(A: float, N: float, case: int) -> None:
    assert classify_bounds(constant_field(A), constant_field(N), Domain.CUBE) == case


def test_classify_straddling() -> None:
    A = constant_field([0.5, 0, 0, 0, 2.0, 0, 0, 0, 1.0])
    with pytest.raises(NoCaseMatch):
        classify_bounds(A, make_preset("sixteen_I"), Domain.CUBE)


@pytest.mark.parametrize("A, N", [("two_I", "sixteen_I"), ("F1", "F2"), ("F4", "F3")])
@pytest.mark.parametrize("domain", list(Domain))
def test_classification_density_invariant(A: str, N: str, domain: Domain) -> None:
    A_field, N_field = make_preset(A), make_preset(N)
    assert classify_bounds(A_field, N_field, domain, density=2) == classify_bounds(
        A_field, N_field, domain, density=10
    )


def test_t_variant() -> None:
    assert t_variant(Form.A, 1) is TVariant.W_2W_MINUS_V
    assert t_variant(Form.C, 1) is TVariant.W_2W_MINUS_V
    assert t_variant(Form.A, 3) is TVariant.W_MINUS_2V
    assert t_variant(Form.C, 2) is TVariant.W_MINUS_2V
    assert t_variant(Form.C, 4) is TVariant.W_2W_MINUS_V
    with pytest.raises(ValueError):
        t_variant(Form.A, 5)

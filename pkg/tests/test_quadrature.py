from math import factorial

import numpy as np
import pytest

from maxtev.errors import UnsupportedDegree
from maxtev.quadrature import line_rule, quadrature_rule, triangle_rule


def _monomials(degree: int, dim: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(a,) for a in range(degree + 1)]
    return [
        (a, *rest)
        for a in range(degree + 1)
        for rest in _monomials(degree - a, dim - 1)
    ]


def _simplex_integral(powers: tuple[int, ...]) -> float:
    """Integral of prod x_i^p_i over the unit simplex."""
    numerator = np.prod([factorial(p) for p in powers])
    return float(numerator / factorial(sum(powers) + len(powers)))


@pytest.mark.parametrize("degree", range(1, 11))
def test_tet_rule_exactness(degree: int) -> None:
    rule = quadrature_rule(degree)

    assert np.all(rule.weights > 0)
    for powers in _monomials(degree, 3):
        approx = np.sum(rule.weights * np.prod(rule.points**powers, axis=1))
        assert approx == pytest.approx(_simplex_integral(powers), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("degree", [2, 5, 8])
def test_triangle_rule_exactness(degree: int) -> None:
    rule = triangle_rule(degree)

    assert rule.weights.sum() == pytest.approx(0.5)
    for powers in _monomials(degree, 2):
        approx = np.sum(rule.weights * np.prod(rule.points**powers, axis=1))
        assert approx == pytest.approx(_simplex_integral(powers), rel=1e-12)


def test_line_rule() -> None:
    rule = line_rule(4)
    s = rule.points[:, 0]

    assert rule.weights.sum() == pytest.approx(1.0)
    assert np.sum(rule.weights * s**4) == pytest.approx(0.2)


def test_points_inside_reference_tet() -> None:
    rule = quadrature_rule(8)

    assert rule.size == 125
    assert np.all(rule.points > 0)
    assert np.all(rule.points.sum(axis=1) < 1)
    assert np.allclose(rule.barycentric.sum(axis=1), 1.0)


def test_rules_are_cached_and_frozen() -> None:
    assert quadrature_rule(6) is quadrature_rule(6)
    with pytest.raises(ValueError):
        quadrature_rule(6).weights[0] = 1.0


@pytest.mark.parametrize("degree", [0, 11, -3])
def test_unsupported_degree(degree: int) -> None:
    with pytest.raises(UnsupportedDegree):
        quadrature_rule(degree)
    with pytest.raises(UnsupportedDegree):
        triangle_rule(degree)

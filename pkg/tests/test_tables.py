from typing import Any

import pytest

from maxtev import load_config
from maxtev.config import RunConfig
from maxtev.dof_spaces import build_coupled_field_space
from maxtev.harness import ConvergenceTable, run_convergence
from maxtev.mesh import build_cube_mesh
from maxtev.presets import preset_layer

pytestmark = pytest.mark.slow


def _study(
    preset: str, n_list: list[int], nev: int, **overrides: Any
) -> ConvergenceTable:
    config = load_config(
        RunConfig,
        preset_layer(preset),
        {"command": "converge", "n_list": n_list, "solver": {"nev": nev}},
        overrides,
    )
    return run_convergence(config)


def _lowest(preset: str, n: int) -> tuple[complex, ...]:
    return _study(preset, [n], 4).records[0].k


# The published linear-element values come from a different cube mesh: ours
# keeps the triple eigenvalue near 1.2099 as a double plus a single, theirs
# splits it three ways. At n=6 the gap is at most 7.6e-4.
def test_constant_coefficients_linear() -> None:
    k = _lowest("table1-case1", 6)

    assert max(abs(x.imag) for x in k) < 1e-6
    assert k[0].real == pytest.approx(k[1].real, rel=1e-8)
    assert [x.real for x in k] == pytest.approx(
        [1.20351, 1.20369, 1.20374, 1.46189], abs=1e-3
    )


def test_matrix_coefficients_quadratic() -> None:
    k = _lowest("table3-case3", 3)

    assert [x.real for x in k] == pytest.approx(
        [3.866098, 4.275852, 4.432275, 4.466491], abs=1.5e-3
    )


@pytest.mark.parametrize(
    "preset, reference",
    [("table3-case1", 1.209871), ("table3-case2", 4.390513)],
)
def test_extrapolated_reference(preset: str, reference: float) -> None:
    table = _study(preset, [5, 6, 7, 8], 1)

    assert table.references is not None
    assert table.references[0].real == pytest.approx(reference, abs=2e-5)
    assert all(3.2 <= rate <= 4.8 for rate in table.rates[0][1:3])


def test_linear_rates_against_published_reference() -> None:
    table = _study(
        "table1-case1",
        [6, 7, 8],
        4,
        references=["1.209871", "1.209870", "1.209870", "1.473293"],
    )

    for column in table.rates:
        assert all(1.6 <= rate <= 2.6 for rate in column[1:]), column


# Our linear-element values for case 2 sit below the published ones (4.375
# against 4.39829 at n=6) but extrapolate to the same limit.
@pytest.mark.parametrize(
    "preset, reference",
    [("table1-case2", 4.390513), ("table1-case3", 3.864985)],
)
def test_linear_limit_matches_quadratic(preset: str, reference: float) -> None:
    table = _study(preset, [4, 6, 8], 1)

    assert table.references is not None
    assert table.references[0].real == pytest.approx(reference, abs=3e-3)


def test_complex_pair_thick_l() -> None:
    pair = [k for k in _lowest("table4-case3", 2) if abs(k.imag) > 1e-6]

    assert len(pair) == 1
    assert 0.020 <= pair[0].imag <= 0.035


@pytest.mark.parametrize("n, order, dim", [(11, 0, 37334), (8, 1, 77920)])
def test_published_dimensions(n: int, order: int, dim: int) -> None:
    assert build_coupled_field_space(build_cube_mesh(n), order).dim == dim

from collections.abc import Iterator

import pytest
from loguru import logger

from maxtev.assembly import TransmissionProblem, assemble_transmission_problem
from maxtev.coefficients import make_preset
from maxtev.mesh import TetMesh, build_cube_mesh, build_thick_l_mesh


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run table reproductions"
    )


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: table reproduction, needs --runslow")


def pytest_collection_modifyitems(
    config: pytest.Config, items: list[pytest.Item]
) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def cleanup() -> Iterator[None]:
    yield
    logger.remove()
    logger.disable("maxtev")


@pytest.fixture(scope="session")
def cube1() -> TetMesh:
    return build_cube_mesh(1)


@pytest.fixture(scope="session")
def cube2() -> TetMesh:
    return build_cube_mesh(2)


@pytest.fixture(scope="session")
def thick_l1() -> TetMesh:
    return build_thick_l_mesh(1)


@pytest.fixture(scope="session")
def cube2_problem(cube2: TetMesh) -> TransmissionProblem:
    """Linear elements, A=2I, N=16I."""
    return assemble_transmission_problem(
        cube2, 0, make_preset("two_I"), make_preset("sixteen_I")
    )


@pytest.fixture(scope="session")
def thick_l1_problem(thick_l1: TetMesh) -> TransmissionProblem:
    """Linear elements, A=F4, N=F3."""
    return assemble_transmission_problem(
        thick_l1, 0, make_preset("F4"), make_preset("F3")
    )


@pytest.fixture(scope="session")
def thick_l1_quadratic_problem(thick_l1: TetMesh) -> TransmissionProblem:
    """Quadratic elements, A=F4, N=F3 (476 coupled field unknowns)."""
    return assemble_transmission_problem(
        thick_l1, 1, make_preset("F4"), make_preset("F3")
    )

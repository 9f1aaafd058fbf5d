import os

from pytest_mock import MockerFixture

from maxtev import load_config
from maxtev.config import RunConfig
from maxtev.loaders import env_loader, load_env


def test_load_env(mocker: MockerFixture) -> None:
    mocker.patch.dict(
        os.environ,
        {
            "FOO": "foo",
            "MAXTEV_THREADS": "4",
            "MAXTEV_NEV": "6",
            "MAXTEV_LOG_LEVEL": "",
        },
    )

    configdict = load_env(RunConfig, validate=False)
    assert configdict == {"threads": "4", "solver": {"nev": "6"}}


def test_load_env_custom_mapping() -> None:
    configdict = load_env(
        mapping={"DEGREE": "quadrature_degree"},
        prefix="app_",
        env={"APP_DEGREE": "6", "MAXTEV_THREADS": "2"},
    )
    assert configdict == {"quadrature_degree": "6"}


def test_load_env_subpath() -> None:
    configdict = load_env(
        mapping={"NEV": "nev"}, subpath="solver", env={"MAXTEV_NEV": "3"}
    )
    assert configdict == {"solver": {"nev": "3"}}


def test_env_loader(mocker: MockerFixture) -> None:
    mocker.patch.dict(
        os.environ,
        {
            "MAXTEV_THREADS": "8",
            "MAXTEV_QUADRATURE_DEGREE": "6",
        },
    )

    config = load_config(
        RunConfig,
        {"command": "solve", "threads": 1, "quadrature_degree": 8},
        env_loader(),
        {"threads": 2},
    )

    assert config.threads == 2
    assert config.quadrature_degree == 6

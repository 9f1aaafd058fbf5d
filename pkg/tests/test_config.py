from dataclasses import asdict

import pytest
from apischema import serialize

from maxtev import MISSING, configclass, load_config
from maxtev.config import RunConfig, SolverSettings, validate_run_config
from maxtev.errors import ConfigError
from maxtev.types import Command, Domain


@configclass
class WebServerConfig:
    host: str
    port: int


@configclass
class Config:
    web: WebServerConfig
    name: str
    values: list[int] | None = None


@configclass
class ConfigWithDefaults:
    name: str = "default"
    number: int = 10


def test_nested_config() -> None:
    config = load_config(
        Config,
        {"name": "foo"},
        {"web": {"host": "foo"}},
        {"web": {"host": "bar", "port": 80}},
        {"values": [1, 2]},
        {"values": [3]},
    )

    assert serialize(Config, config) == {
        "name": "foo",
        "values": [3],
        "web": {
            "host": "bar",
            "port": 80,
        },
    }


def test_callables() -> None:
    config = load_config(
        Config,
        lambda x: {"name": "foo", "values": [1]},
        lambda x: {"web": {"host": "localhost", "port": 80}},
    )

    assert serialize(Config, config) == {
        "name": "foo",
        "values": [1],
        "web": {"host": "localhost", "port": 80},
    }


def test_missing() -> None:
    config = load_config(
        Config,
        {"name": "foo", "values": [1], "web": {"host": "localhost", "port": 80}},
        {"name": MISSING, "web": MISSING},
    )

    assert asdict(config) == {
        "name": "foo",
        "values": [1],
        "web": {"host": "localhost", "port": 80},
    }


def test_missing_with_defaults() -> None:
    config_with_defaults = load_config(
        ConfigWithDefaults, {"name": MISSING, "number": 20}
    )

    assert asdict(config_with_defaults) == {
        "name": "default",
        "number": 20,
    }


def test_not_a_configclass() -> None:
    class Plain:
        pass

    with pytest.raises(ValueError):
        load_config(Plain, {})


def test_run_config_defaults() -> None:
    config = load_config(RunConfig, {"command": "solve"})

    assert config.command is Command.SOLVE
    assert config.order == 0
    assert config.A == "two_I"
    assert config.N == "sixteen_I"
    assert config.solver == SolverSettings()
    assert config.n_values == []


def test_run_config_layers() -> None:
    config = load_config(
        RunConfig,
        {"command": "converge", "domain": "cube", "n_list": [6, 7, 8]},
        {"solver": {"nev": 6}},
        {"n_list": [2, 3], "solver": {"tol": "1e-9"}},
    )

    assert config.domain is Domain.CUBE
    assert config.n_values == [2, 3]
    assert config.solver.nev == 6
    assert config.solver.tol == 1e-9


def test_unknown_key_has_path() -> None:
    with pytest.raises(ConfigError) as exc_info:
        load_config(RunConfig, {"command": "solve", "solver": {"nevv": 3}})

    assert exc_info.value.path is not None
    assert exc_info.value.path.startswith("solver")


def test_inline_coefficient() -> None:
    config = load_config(
        RunConfig, {"command": "mesh", "A": [2, 0, 0, 0, 2, 0, 0, 0, 2]}
    )
    assert config.A == [2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]


def test_reference_values() -> None:
    config = load_config(
        RunConfig, {"command": "converge", "references": ["1.2", "3.38729+0.027908i"]}
    )
    assert config.reference_values == [1.2, complex(3.38729, 0.027908)]


def _solve(**kwargs: object) -> RunConfig:
    layer = {"command": "solve", "domain": "cube", "n": 2, "k_window": [1.0, 1.6]}
    layer.update(kwargs)
    return load_config(RunConfig, layer)


def test_validate_ok() -> None:
    config = _solve()
    assert validate_run_config(config) is config


@pytest.mark.parametrize(
    "changes, path",
    [
        ({"domain": None}, "domain"),
        ({"n": None}, "n"),
        ({"n": 0}, "n_list"),
        ({"n_list": [3, 2]}, "n_list"),
        ({"order": 2}, "order"),
        ({"k_window": None}, "k_window"),
        ({"k_window": [2.0, 1.0]}, "k_window"),
        ({"A": [1, 2, 0, 0, 1, 0, 0, 0, 1]}, "A"),
        ({"N": [-1]}, "N"),
        ({"N": [1, 2]}, "N"),
        ({"quadrature_degree": 11}, "quadrature_degree"),
        ({"solver": {"nev": 0}}, "solver.nev"),
        ({"threads": 0}, "threads"),
        ({"mode": 0}, "mode"),
        ({"log_level": "LOUD"}, "log_level"),
        ({"references": ["x"]}, "references"),
        ({"references": ["1"], "reference_n": 4}, "reference_n"),
    ],
)
def test_validate_errors(changes: dict[str, object], path: str) -> None:
    with pytest.raises(ConfigError) as exc_info:
        validate_run_config(_solve(**changes))

    assert exc_info.value.path == path


def test_missing_domain_message() -> None:
    with pytest.raises(ConfigError, match="domain: missing required key"):
        validate_run_config(_solve(domain=None))


def test_not_hermitian_message() -> None:
    with pytest.raises(ConfigError, match="A: matrix is not Hermitian"):
        validate_run_config(_solve(A=[1, 2, 0, 0, 1, 0, 0, 0, 1]))


def test_verify_needs_no_domain() -> None:
    config = load_config(RunConfig, {"command": "verify", "all": True})
    assert validate_run_config(config).all

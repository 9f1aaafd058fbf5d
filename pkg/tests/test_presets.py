import pytest

from maxtev import load_config
from maxtev.config import RunConfig, validate_run_config
from maxtev.errors import UnknownPreset
from maxtev.presets import PRESETS, preset_layer, preset_names
from maxtev.types import Command, Domain


def test_names() -> None:
    names = preset_names()

    assert len(names) == 12
    assert names[0] == "table1-case1"
    assert "table4-case3" in names


def test_table1_case1() -> None:
    layer = preset_layer("table1-case1")

    assert layer == {
        "domain": "cube",
        "order": 0,
        "A": "two_I",
        "N": "sixteen_I",
        "n_list": [6, 7, 8, 9, 10, 11],
        "k_window": [1.0, 1.6],
    }


def test_layer_is_a_copy() -> None:
    layer = preset_layer("table3-case2")
    layer["n_list"].append(42)

    assert 42 not in PRESETS["table3-case2"]["n_list"]


def test_no_preset() -> None:
    assert preset_layer(None) == {}


def test_unknown_preset() -> None:
    with pytest.raises(UnknownPreset):
        preset_layer("table5-case1")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate(name: str) -> None:
    config = load_config(RunConfig, preset_layer(name), {"command": "converge"})

    assert validate_run_config(config).command is Command.CONVERGE
    assert config.domain in (Domain.CUBE, Domain.THICK_L)


def test_preset_overridden() -> None:
    config = load_config(
        RunConfig,
        preset_layer("table4-case3"),
        {"command": "solve", "n_list": [2], "solver": {"nev": 2}},
    )

    assert config.domain is Domain.THICK_L
    assert config.order == 1
    assert config.n_values == [2]
    assert config.A == "F4"
    assert config.solver.nev == 2

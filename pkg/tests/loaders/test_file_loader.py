import json
from dataclasses import asdict
from pathlib import Path
from textwrap import dedent

import pytest

from maxtev import load_config
from maxtev.config import RunConfig, SolverSettings
from maxtev.errors import (
    ConfigError,
    NoConfigFileError,
    UnsupportedFileType,
    ValidationError,
)
from maxtev.loaders import file_loader, load_file
from maxtev.types import Domain

STUDY = {"command": "converge", "domain": "cube", "n_list": [2, 3], "order": 1}


def _write_json(path: Path, obj: object) -> Path:
    with open(path, "w") as fout:
        json.dump(obj, fout)
    return path


def test_without_files() -> None:
    assert load_file(RunConfig, files=[]) == []


def test_without_existing_files(tmp_path: Path) -> None:
    files = [
        tmp_path / "missing_study.yaml",
        tmp_path / "missing_study.json",
    ]
    assert load_file(RunConfig, files=files) == []


def test_without_existing_files_but_one_required(tmp_path: Path) -> None:
    files = [
        tmp_path / "missing_study.yaml",
        tmp_path / "missing_study.json",
    ]

    with pytest.raises(NoConfigFileError):
        load_file(RunConfig, files=files, load_at_least_one_file=True)


def test_load(tmp_path: Path) -> None:
    filename = _write_json(tmp_path / "study.json", STUDY)

    assert load_file(RunConfig, files=filename) == [STUDY]


def test_partial_file_is_not_validated(tmp_path: Path) -> None:
    partial = {"n_list": [4, 5]}
    filename = _write_json(tmp_path / "mesh.json", partial)

    assert load_file(RunConfig, files=filename) == [partial]

    with pytest.raises(ValidationError):
        load_file(RunConfig, files=filename, validate=True)


def test_load_multiple_files(tmp_path: Path) -> None:
    machine = {"threads": 4}
    files = [
        _write_json(tmp_path / "study.json", STUDY),
        _write_json(tmp_path / "machine.json", machine),
    ]

    assert load_file(RunConfig, files=files) == [STUDY, machine]


def test_one_file_exist(tmp_path: Path) -> None:
    filename = _write_json(tmp_path / "study.json", STUDY)

    assert load_file(
        RunConfig, files=[tmp_path / "a.json", filename, tmp_path / "b.json"]
    ) == [STUDY]


def test_some_files_exist_but_all_required(tmp_path: Path) -> None:
    filename = _write_json(tmp_path / "study.json", STUDY)

    with pytest.raises(NoConfigFileError):
        load_file(
            RunConfig,
            files=[tmp_path / "a.json", filename],
            load_all_files=True,
        )


def test_unsupported_suffix(tmp_path: Path) -> None:
    filename = tmp_path / "study.ini"
    filename.write_text("[study]\n")

    with pytest.raises(UnsupportedFileType):
        load_file(RunConfig, files=filename)


def test_malformed_json(tmp_path: Path) -> None:
    filename = tmp_path / "study.json"
    filename.write_text("{not json")

    with pytest.raises(ConfigError) as exc_info:
        load_file(RunConfig, files=filename)
    assert exc_info.value.path == str(filename)


def test_top_level_list(tmp_path: Path) -> None:
    filename = _write_json(tmp_path / "study.json", [1, 2])

    with pytest.raises(ConfigError, match="top level must be a mapping"):
        load_file(RunConfig, files=filename)


def test_subpath(tmp_path: Path) -> None:
    filename = _write_json(tmp_path / "solver.json", {"nev": 6})

    assert load_file(
        SolverSettings, files=[filename], subpath="solver", validate=True
    ) == [{"solver": {"nev": 6}}]


def test_yaml(tmp_path: Path) -> None:
    filename = tmp_path / "study.yaml"
    with open(filename, "w") as fout:
        print(
            dedent(
                """\
                command: converge
                domain: thickL
                n_list: [1, 2]
                solver:
                  nev: 4
                """
            ),
            file=fout,
        )

    assert load_file(RunConfig, files=filename) == [
        {
            "command": "converge",
            "domain": "thickL",
            "n_list": [1, 2],
            "solver": {"nev": 4},
        }
    ]


def test_toml(tmp_path: Path) -> None:
    filename = tmp_path / "study.toml"
    with open(filename, "w") as fout:
        print(
            dedent(
                """\
                command = "solve"
                k_window = [1.0, 1.6]
                [solver]
                tol = 1e-9
                """
            ),
            file=fout,
        )

    assert load_file(RunConfig, files=filename) == [
        {"command": "solve", "k_window": [1.0, 1.6], "solver": {"tol": 1e-9}}
    ]


def test_file_loader(tmp_path: Path) -> None:
    filename = _write_json(tmp_path / "solver.json", {"nev": 5, "shift": 2.0})

    config = load_config(
        RunConfig,
        {"command": "solve", "domain": "cube"},
        file_loader(cls=SolverSettings, files=filename, subpath="solver"),
    )
    assert config.domain is Domain.CUBE
    assert asdict(config.solver) == asdict(SolverSettings(nev=5, shift=2.0))

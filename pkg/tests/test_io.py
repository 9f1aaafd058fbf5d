import csv
from pathlib import Path

import pytest

from maxtev.io import atomic_path, write_csv, write_text


def test_atomic_write(tmp_path: Path) -> None:
    path = tmp_path / "out" / "report.txt"

    write_text(path, "first\n")
    write_text(path, "second\n")

    assert path.read_text() == "second\n"
    assert list(path.parent.iterdir()) == [path]


def test_atomic_path_failure_keeps_target(tmp_path: Path) -> None:
    path = tmp_path / "report.txt"
    path.write_text("old")

    with pytest.raises(RuntimeError):
        with atomic_path(path) as tmp:
            tmp.write_text("partial")
            raise RuntimeError("interrupted")

    assert path.read_text() == "old"
    assert list(tmp_path.iterdir()) == [path]


def test_write_csv(tmp_path: Path) -> None:
    path = tmp_path / "rows.csv"
    rows = [{"n": "1", "k": "1.5"}, {"n": "2", "k": ""}]

    write_csv(path, rows, ["n", "k"])

    assert path.read_text() == "n,k\n1,1.5\n2,\n"
    with open(path, newline="") as fin:
        assert list(csv.DictReader(fin)) == rows

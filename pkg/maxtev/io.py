"""File writers.

Every writer goes through [`atomic_path`][maxtev.io.atomic_path]: the content is
written to a hidden sibling of the target and renamed over it, so a crashed or
interrupted run never leaves a truncated file behind.
"""
from __future__ import annotations

import contextlib
import csv
import os
import tempfile
from collections.abc import Iterator, Mapping, Sequence
from pathlib import Path

import meshio
import numpy as np
from loguru import logger
from numpy.typing import NDArray

from maxtev.mesh import TetMesh


@contextlib.contextmanager
def atomic_path(path: str | Path) -> Iterator[Path]:
    """Yield a temporary path that replaces `path` when the block succeeds."""
    target = Path(path).expanduser()
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, name = tempfile.mkstemp(
        prefix=f".{target.name}.", suffix=target.suffix, dir=target.parent
    )
    os.close(fd)
    tmp = Path(name)
    try:
        yield tmp
        os.replace(tmp, target)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    logger.debug("wrote {}", target)


def write_text(path: str | Path, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")


def write_csv(
    path: str | Path,
    rows: Sequence[Mapping[str, str]],
    fieldnames: Sequence[str],
) -> None:
    with atomic_path(path) as tmp, tmp.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def mesh_text(mesh: TetMesh) -> str:
    """Plain listing: a header, the vertices, then 0-based tet connectivity."""
    domain = mesh.domain.value if mesh.domain else "mesh"
    lines = [
        f"# {domain} h={mesh.h:.17g}",
        f"vertices {mesh.n_vertices}",
        *(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices),
        f"tets {mesh.n_tets}",
        *(" ".join(map(str, tet)) for tet in mesh.tets),
    ]
    return "\n".join(lines) + "\n"


def write_mesh_text(mesh: TetMesh, path: str | Path) -> None:
    write_text(path, mesh_text(mesh))


def write_mesh_vtk(
    mesh: TetMesh,
    path: str | Path,
    cell_data: Mapping[str, NDArray[np.float64]] | None = None,
) -> None:
    """Legacy ASCII VTK unstructured grid with optional per-tet data."""
    grid = meshio.Mesh(
        points=mesh.vertices,
        cells=[("tetra", mesh.tets.astype(np.int64))],
        cell_data={
            name: [np.asarray(values)] for name, values in (cell_data or {}).items()
        },
    )
    with atomic_path(path) as tmp:
        meshio.write(tmp, grid, file_format="vtk", binary=False)

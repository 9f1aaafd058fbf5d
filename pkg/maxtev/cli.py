"""Command line front end.

    python -m maxtev solve --domain thickL --n 4 --order 0 --A F4 --N F3
    python -m maxtev converge --preset table3-case3 --out t3.csv
    python -m maxtev verify --all --max-n 3

Every flag defaults to `MISSING`, so only the flags actually given override
the preset, the `--config` files and the `MAXTEV_*` environment.
"""
from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from maxtev.assembly import (
    TransmissionProblem,
    assemble_transmission_problem,
    write_matrix_market,
)
from maxtev.coefficients import coefficient_from_config
from maxtev.config import MISSING, RunConfig, load_config, validate_run_config
from maxtev.eigensolver import EigenRecord, select_lowest, solve_window
from maxtev.errors import MaxtevError, NoConfigFileError, NoEigenvaluesInWindow
from maxtev.harness import export_fields, run_convergence, write_table_csv
from maxtev.io import write_csv, write_mesh_text, write_mesh_vtk
from maxtev.loaders import env_loader, file_loader, load_file
from maxtev.mesh import TetMesh, build_mesh
from maxtev.presets import preset_layer, preset_names
from maxtev.tree import set_path
from maxtev.types import Command, Domain, FieldComponent, OutputFormat
from maxtev.verification import run_all_checks

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"

REPORT_FIELDS = (
    "property",
    "meshes",
    "quantity",
    "observed",
    "threshold",
    "passed",
    "details",
)
SOLVE_FIELDS = ("n", "h", "dofs", "j", "re_k", "im_k", "residual")

# flag dest -> dotted path in RunConfig
_FLAG_PATHS = {
    "domain": "domain",
    "n": "n",
    "n_list": "n_list",
    "order": "order",
    "A": "A",
    "N": "N",
    "k_window": "k_window",
    "shift": "solver.shift",
    "nev": "solver.nev",
    "tol": "solver.tol",
    "residual_tol": "solver.residual_tol",
    "out": "out",
    "preset": "preset",
    "format": "format",
    "which": "which",
    "mode": "mode",
    "all": "all",
    "max_n": "max_n",
    "threads": "threads",
    "log_level": "log_level",
    "pinned_vertex": "pinned_vertex",
    "quadrature_degree": "quadrature_degree",
    "references": "references",
    "reference_n": "reference_n",
}


def _coefficient(text: str) -> str | list[float]:
    """A preset name, or 1 or 9 comma/space separated numbers."""
    parts = text.replace(",", " ").split()
    try:
        return [float(x) for x in parts]
    except ValueError:
        return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        action="append",
        default=[],
        metavar="FILE",
        help="JSON, YAML or TOML run configuration (repeatable)",
    )
    common.add_argument("--preset", default=MISSING, choices=preset_names())
    common.add_argument("--domain", default=MISSING, choices=[d.value for d in Domain])
    common.add_argument("--n", type=int, default=MISSING, help="cubes per unit length")
    common.add_argument("--n-list", type=int, nargs="+", default=MISSING)
    common.add_argument("--order", type=int, default=MISSING, choices=(0, 1))
    for name in ("--A", "--N"):
        common.add_argument(
            name,
            type=_coefficient,
            default=MISSING,
            help="coefficient preset or inline 1 or 9 numbers",
        )
    common.add_argument(
        "--k-window",
        type=float,
        nargs=2,
        default=MISSING,
        metavar=("LOW", "HIGH"),
    )
    common.add_argument("--shift", type=float, default=MISSING)
    common.add_argument("--nev", type=int, default=MISSING)
    common.add_argument("--tol", type=float, default=MISSING)
    common.add_argument("--residual-tol", type=float, default=MISSING)
    common.add_argument("--quadrature-degree", type=int, default=MISSING)
    common.add_argument("--pinned-vertex", type=int, default=MISSING)
    common.add_argument("--out", default=MISSING)
    common.add_argument(
        "--format", default=MISSING, choices=[f.value for f in OutputFormat]
    )
    common.add_argument("--threads", type=int, default=MISSING)
    common.add_argument("--log-level", default=MISSING)

    parser = argparse.ArgumentParser(
        prog="maxtev", description="Maxwell transmission eigenvalues."
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("mesh", parents=[common], help="write a mesh")
    commands.add_parser("solve", parents=[common], help="lowest eigenvalues")

    converge = commands.add_parser(
        "converge", parents=[common], help="convergence table"
    )
    converge.add_argument(
        "--references",
        nargs="+",
        default=MISSING,
        help="reference values, e.g. 3.38729+0.027908i",
    )
    converge.add_argument(
        "--reference-n",
        type=int,
        default=MISSING,
        help="mesh of a quadratic-element reference solve",
    )

    verify = commands.add_parser(
        "verify", parents=[common], help="numerical property checks"
    )
    verify.add_argument("--all", action="store_const", const=True, default=MISSING)
    verify.add_argument("--max-n", type=int, default=MISSING)

    export = commands.add_parser(
        "export", parents=[common], help="eigenfunction VTK or pencil MatrixMarket"
    )
    export.add_argument(
        "--which", default=MISSING, choices=[c.value for c in FieldComponent]
    )
    export.add_argument("--mode", type=int, default=MISSING)
    return parser


def _flag_layer(args: argparse.Namespace) -> dict[str, Any]:
    layer: dict[str, Any] = {"command": args.command}
    for dest, path in _FLAG_PATHS.items():
        value = getattr(args, dest, MISSING)
        if value is not MISSING:
            set_path(layer, path, value)
    return layer


def _file_preset(files: Sequence[str]) -> str | None:
    preset = None
    for content in load_file(files=files, load_all_files=True):
        preset = content.get("preset", preset)
    return preset


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse flags and merge them over preset, files and environment.

    Raises:
        ConfigError: with the key path of the first invalid entry.
        UnknownPreset: for a preset named in a file that does not exist.
    """
    args = build_parser().parse_args(argv)
    missing = [Path(f) for f in args.config if not Path(f).expanduser().is_file()]
    if missing:
        raise NoConfigFileError(missing)
    flags = _flag_layer(args)
    preset = flags.get("preset") or _file_preset(args.config)
    config = load_config(
        RunConfig,
        preset_layer(preset),
        file_loader(files=args.config, load_all_files=True),
        env_loader(),
        flags,
    )
    return validate_run_config(config)


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)
    logger.enable("maxtev")


def format_k(k: complex) -> str:
    if abs(k.imag) < 5e-7:
        return f"{k.real:.6f}"
    return f"{k.real:.6f}{k.imag:+.6f}i"


def _problem(config: RunConfig, n: int) -> TransmissionProblem:
    assert config.domain is not None
    return assemble_transmission_problem(
        build_mesh(config.domain, n),
        config.order,
        coefficient_from_config(config.A),
        coefficient_from_config(config.N),
        quadrature_degree=config.quadrature_degree,
        pinned_vertex=config.pinned_vertex,
    )


def _lowest(
    config: RunConfig, problem: TransmissionProblem, count: int
) -> list[EigenRecord]:
    assert config.k_window is not None
    result = solve_window(problem.pencil, config.k_window, config.solver)
    return select_lowest(result, count)


def mesh_summary(mesh: TetMesh) -> str:
    assert mesh.boundary_edges is not None and mesh.boundary_faces is not None
    return (
        f"vertices={mesh.n_vertices} edges={mesh.n_edges} faces={mesh.n_faces} "
        f"tets={mesh.n_tets} boundary_edges={int(mesh.boundary_edges.sum())} "
        f"boundary_faces={int(mesh.boundary_faces.sum())} "
        f"euler={mesh.euler_characteristic()}"
    )


def _output_format(config: RunConfig, default: OutputFormat) -> OutputFormat:
    if config.format is not None:
        return config.format
    if config.out is not None and Path(config.out).suffix == ".vtk":
        return OutputFormat.VTK
    return default


def run_mesh(config: RunConfig) -> int:
    assert config.domain is not None
    for n in config.n_values:
        mesh = build_mesh(config.domain, n)
        print(f"{config.domain.value} n={n}: {mesh_summary(mesh)}")
        if config.out is None:
            continue
        out = Path(config.out)
        if len(config.n_values) > 1:
            out = out.with_name(f"{out.stem}_n{n}{out.suffix}")
        if _output_format(config, OutputFormat.TXT) is OutputFormat.VTK:
            write_mesh_vtk(mesh, out, {"volume": mesh.volumes()})
        else:
            write_mesh_text(mesh, out)
    return 0


def run_solve(config: RunConfig) -> int:
    rows = []
    for n in config.n_values:
        problem = _problem(config, n)
        records = _lowest(config, problem, config.solver.nev)
        print(f"n={n} h={problem.mesh.h:.6g} dofs={problem.H.dim}")
        for j, record in enumerate(records, 1):
            pair = "  (conjugate pair)" if record.conjugate_pair else ""
            print(f"  k{j} = {format_k(record.k)}{pair}")
            rows.append(
                {
                    "n": str(n),
                    "h": f"{problem.mesh.h:.10g}",
                    "dofs": str(problem.H.dim),
                    "j": str(j),
                    "re_k": f"{record.k.real:.10f}",
                    "im_k": f"{record.k.imag:.10f}",
                    "residual": f"{record.residual:.3e}",
                }
            )
    if config.out is not None:
        write_csv(config.out, rows, SOLVE_FIELDS)
    return 0


def run_converge(config: RunConfig) -> int:
    table = run_convergence(config)
    for row in table.rows():
        print("  ".join(f"{key}={value}" for key, value in row.items() if value))
    if config.out is not None:
        write_table_csv(table, config.out)
    return 0


def run_verify(config: RunConfig) -> int:
    if config.all or config.domain is None:
        reports = run_all_checks(config.max_n, solver=config.solver)
    else:
        reports = run_all_checks(
            config.max_n,
            domains=[config.domain],
            orders=[config.order],
            solver=config.solver,
        )
    for report in reports:
        status = "ok  " if report.passed else "FAIL"
        observed = " ".join(f"{k}={v:.3e}" for k, v in report.observed.items())
        print(f"{status} {report.name} [{', '.join(report.meshes)}] {observed}")
    if config.out is not None:
        rows = [row for report in reports for row in report.rows()]
        write_csv(config.out, rows, REPORT_FIELDS)
    return 0 if all(r.passed for r in reports) else 1


def run_export(config: RunConfig) -> int:
    assert config.domain is not None
    n = config.n_values[-1]
    problem = _problem(config, n)
    stem = f"{config.domain.value}_n{n}_k{config.order}"

    if config.format is OutputFormat.MM:
        out = Path(config.out or f"{stem}.mtx")
        suffix = out.suffix or ".mtx"
        for name, matrix in (("K", problem.pencil.K), ("M", problem.pencil.M)):
            path = out.with_name(f"{out.stem}_{name}{suffix}")
            write_matrix_market(matrix, path, comment=f"maxtev {stem} {name}")
            print(path)
        return 0

    records = _lowest(config, problem, max(config.mode, config.solver.nev))
    if config.mode > len(records):
        raise NoEigenvaluesInWindow(
            f"Mode {config.mode} requested, {len(records)} eigenvalues in window."
        )
    record = records[config.mode - 1]
    out = Path(config.out or f"{stem}_mode{config.mode}_{config.which.value}.vtk")
    field = record.field_block(problem.pencil.n_field)
    export_fields(problem.H, np.asarray(field), config.which, out)
    print(f"k{config.mode} = {format_k(record.k)} -> {out}")
    return 0


COMMANDS: dict[Command, Callable[[RunConfig], int]] = {
    Command.MESH: run_mesh,
    Command.SOLVE: run_solve,
    Command.CONVERGE: run_converge,
    Command.VERIFY: run_verify,
    Command.EXPORT: run_export,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command; 0 on success, 2 on any maxtev error."""
    try:
        config = parse_config(argv)
    except MaxtevError as err:
        print(f"maxtev: error: {err}", file=sys.stderr)
        return 2
    configure_logging(config.log_level)
    try:
        return COMMANDS[config.command](config)
    except MaxtevError as err:
        print(f"maxtev: error: {err}", file=sys.stderr)
        return 2

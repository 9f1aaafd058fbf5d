"""Run configuration: layered loading and validation.

A run is described by a [`RunConfig`][maxtev.config.RunConfig]. It is built
from several layers, lowest priority first:

1. the dataclass defaults,
2. a named preset (see [`maxtev.presets`][maxtev.presets]),
3. configuration files (JSON, YAML or TOML),
4. `MAXTEV_*` environment variables,
5. command-line flags.

Layers are merged as nested dicts. Dicts merge recursively; any other value,
lists included, is replaced by the higher layer. `MISSING` values (the argparse
default of the CLI) are pruned, so an absent flag never hides a lower layer.
"""
from collections.abc import Callable, Iterable, Iterator, Mapping, MutableMapping
from dataclasses import MISSING, dataclass, field, is_dataclass
from typing import Any, TypeVar, cast

import numpy as np
from apischema import ValidationError as ApischemaValidationError
from apischema import deserialize
from typing_extensions import dataclass_transform

from maxtev.errors import ConfigError
from maxtev.tree import Node, NodePath, copy, ensure_path_prefix
from maxtev.types import Command, Domain, FieldComponent, OutputFormat

_T = TypeVar("_T")

register = set[type]()

__all__ = [
    "MISSING",
    "configclass",
    "load_config",
    "RunConfig",
    "SolverSettings",
    "validate_run_config",
]

Source = dict[str, Any] | Callable[[type[_T]], dict[str, Any] | list[dict[str, Any]]]


@dataclass_transform()
def configclass(cls: type[_T]) -> type[_T]:
    """Register the class as a config class.

    If the class is not already a [`dataclass`][dataclasses], apply the
    [`dataclass`][dataclasses.dataclass] decorator too.

    Examples:
        >>> @configclass
        ... class A:
        ...    x: int
    """
    if not is_dataclass(cls):
        datacls = dataclass(cls)
    else:
        datacls = cls

    register.add(datacls)
    return datacls


def load_config(cls: type[_T], *sources: Source[_T]) -> _T:
    """Load a configuration from multiple sources.

    The first source is the lowest priority one (e.g. a preset), the last one
    is the highest priority one (e.g. command line parameters).

    Args:
        cls: configuration class used for validation and deserialization.
        *sources: configuration sources. A source can be a regular `dict` or a
            [loader][maxtev.loaders].

    Raises:
        ConfigError: if the merged tree does not match `cls`. The message holds
            the key path of the first offending entry.

    Returns:
        An instance of `cls` with the data resulting from the merged sources.
    """
    if cls not in register:
        raise ValueError("First argument of load_config must be a configclass.")

    unflattened_layers = (x(cls) if callable(x) else x for x in sources)
    layers: list[dict[str, Any]] = []

    for x in unflattened_layers:
        if isinstance(x, Iterable) and not isinstance(x, Mapping):
            layers.extend(x)
        else:
            layers.append(x)

    merged = _merge_layers(*layers) if layers else {}
    try:
        return deserialize(cls, merged, coerce=True, additional_properties=False)
    except ApischemaValidationError as errors:
        raise _config_error(errors) from errors


def _config_error(errors: ApischemaValidationError) -> ConfigError:
    # apischema reports `{"loc": [...], "err": "..."}` items
    for item in errors.errors:
        loc = item["loc"] if isinstance(item, Mapping) else item.loc
        err = item["err"] if isinstance(item, Mapping) else item.err
        path = ".".join(str(x) for x in loc)
        return ConfigError(str(err), path=path or None)
    return ConfigError(str(errors))


def _merge_layers(*layers: dict[str, Any]) -> dict[str, Any]:
    """Merge multiple layers into a single one.

    Rules:
    - dicts are merged recursively.
    - any other item, lists included, is replaced.
    - nodes containing a MISSING value are pruned.
    """
    head, *tail = layers
    current = copy(head)

    for layer in tail:
        for node_path, node_value in _visit_dict(layer):
            _merge_node_path(current, node_path, node_value)

    _prune_missing_inplace(current)
    return current


def _prune_missing_inplace(d: MutableMapping[str, Any]) -> None:
    to_del = []

    for k, v in d.items():
        if v is MISSING:
            to_del.append(k)
        elif isinstance(v, MutableMapping) and v:
            _prune_missing_inplace(v)

    for k in to_del:
        del d[k]


def _visit_dict(root: Node) -> Iterator[tuple[list[str], Any]]:
    for key, value in root.items():
        if isinstance(value, dict) and value:
            value = cast(Node, value)
            for node_path, node_value in _visit_dict(value):
                yield [key] + node_path, node_value
        else:
            yield [key], value


def _merge_node_path(tree: Node, path: NodePath, new_value: Any) -> None:
    node, key = ensure_path_prefix(tree, path)

    # don't make any change if the new value is missing
    if new_value is MISSING:
        return

    node[key] = new_value.copy() if isinstance(new_value, list) else new_value


@configclass
class SolverSettings:
    nev: int = 4
    tol: float = 1e-10
    residual_tol: float = 1e-8
    shift: float | None = None
    ncv: int | None = None
    max_iterations: int | None = None


@configclass
class RunConfig:
    """Everything a CLI command needs.

    `A` and `N` are either a preset name (`two_I`, `sixteen_I`, `F1`..`F4`) or
    an inline constant: one number (scalar times identity) or nine numbers in
    row-major order.
    """

    command: Command
    domain: Domain | None = None
    preset: str | None = None
    n: int | None = None
    n_list: list[int] | None = None
    order: int = 0
    A: str | list[float] = "two_I"
    N: str | list[float] = "sixteen_I"
    k_window: list[float] | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    quadrature_degree: int = 8
    pinned_vertex: int | None = None
    out: str | None = None
    format: OutputFormat | None = None
    which: FieldComponent = FieldComponent.V
    mode: int = 1
    max_n: int = 3
    all: bool = False
    threads: int = 1
    log_level: str = "INFO"
    references: list[str] | None = None
    reference_n: int | None = None

    @property
    def n_values(self) -> list[int]:
        if self.n_list:
            return list(self.n_list)
        if self.n is not None:
            return [self.n]
        return []

    @property
    def reference_values(self) -> list[complex] | None:
        if self.references is None:
            return None
        return [complex(x.replace(" ", "").replace("i", "j")) for x in self.references]


_NEEDS_DOMAIN = {Command.MESH, Command.SOLVE, Command.CONVERGE, Command.EXPORT}
_NEEDS_WINDOW = {Command.SOLVE, Command.CONVERGE, Command.EXPORT}
_LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


def validate_run_config(config: RunConfig) -> RunConfig:
    """Semantic checks that the schema cannot express.

    Raises:
        ConfigError: with the key path of the offending entry.
    """
    command = config.command
    if command in _NEEDS_DOMAIN and config.domain is None:
        raise ConfigError(
            f"missing required key for command '{command.value}'", path="domain"
        )
    if command in _NEEDS_DOMAIN and not config.n_values:
        raise ConfigError(
            f"missing required key for command '{command.value}'", path="n"
        )
    if any(n < 1 for n in config.n_values):
        raise ConfigError("mesh parameters must be positive integers", path="n_list")
    if config.n_list is not None and config.n_list != sorted(set(config.n_list)):
        raise ConfigError("must be strictly increasing", path="n_list")
    if config.order not in (0, 1):
        raise ConfigError("edge element order must be 0 or 1", path="order")
    if command in _NEEDS_WINDOW and config.k_window is None:
        raise ConfigError(
            f"missing required key for command '{command.value}'", path="k_window"
        )
    if config.k_window is not None:
        low, high = (config.k_window + [0.0, 0.0])[:2]
        if len(config.k_window) != 2 or not 0 <= low < high:
            raise ConfigError("expected two numbers 0 <= low < high", path="k_window")
    for key in ("A", "N"):
        _validate_coefficient(getattr(config, key), key)
    if not 1 <= config.quadrature_degree <= 10:
        raise ConfigError("must be in [1, 10]", path="quadrature_degree")
    if config.solver.nev < 1:
        raise ConfigError("must be at least 1", path="solver.nev")
    if config.threads < 1:
        raise ConfigError("must be at least 1", path="threads")
    if config.log_level.upper() not in _LOG_LEVELS:
        raise ConfigError(
            f"unknown level, expected one of {', '.join(_LOG_LEVELS)}",
            path="log_level",
        )
    if config.mode < 1:
        raise ConfigError("eigenfunctions are numbered from 1", path="mode")
    if config.reference_n is not None and config.references is not None:
        raise ConfigError(
            "give either explicit references or a reference mesh", path="reference_n"
        )
    try:
        config.reference_values
    except ValueError:
        raise ConfigError("not a complex number", path="references") from None
    return config


def _validate_coefficient(value: str | list[float], key: str) -> None:
    if isinstance(value, str):
        return
    if len(value) == 1:
        if value[0] <= 0:
            raise ConfigError("matrix is not positive definite", path=key)
        return
    if len(value) != 9:
        raise ConfigError("expected 1 or 9 numbers", path=key)
    matrix = np.asarray(value, dtype=np.float64).reshape(3, 3)
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-14):
        raise ConfigError("matrix is not Hermitian", path=key)
    if np.linalg.eigvalsh(matrix).min() <= 0:
        raise ConfigError("matrix is not positive definite", path=key)

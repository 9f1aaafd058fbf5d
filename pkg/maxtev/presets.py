"""Named runs of the published convergence tables.

`table{1..4}-case{1..3}` selects the domain, edge element order and mesh list
of a table and the coefficient setting of a case. A preset is a configuration
layer: files, environment and flags still override every key.
"""
from __future__ import annotations

import copy
from typing import Any

from maxtev.errors import UnknownPreset
from maxtev.types import Domain

# table -> (domain, order, n-list)
TABLES: dict[int, tuple[Domain, int, list[int]]] = {
    1: (Domain.CUBE, 0, list(range(6, 12))),
    2: (Domain.THICK_L, 0, list(range(4, 10))),
    3: (Domain.CUBE, 1, list(range(3, 9))),
    4: (Domain.THICK_L, 1, list(range(1, 7))),
}

CASES: dict[int, tuple[str, str]] = {
    1: ("two_I", "sixteen_I"),
    2: ("F1", "F2"),
    3: ("F4", "F3"),
}

K_WINDOWS: dict[Domain, dict[int, list[float]]] = {
    Domain.CUBE: {1: [1.0, 1.6], 2: [4.2, 5.0], 3: [3.7, 4.6]},
    Domain.THICK_L: {1: [0.7, 1.2], 2: [3.0, 3.5], 3: [2.5, 3.5]},
}


def _build() -> dict[str, dict[str, Any]]:
    presets = {}
    for table, (domain, order, n_list) in TABLES.items():
        for case, (A, N) in CASES.items():
            presets[f"table{table}-case{case}"] = {
                "domain": domain.value,
                "order": order,
                "A": A,
                "N": N,
                "n_list": n_list,
                "k_window": K_WINDOWS[domain][case],
            }
    return presets


PRESETS = _build()


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_layer(name: str | None) -> dict[str, Any]:
    """Configuration layer of a preset, empty for `None`.

    Raises:
        UnknownPreset: for names not in `PRESETS`.
    """
    if name is None:
        return {}
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise UnknownPreset(name, preset_names()) from None

"""Helpers for the nested dicts that configuration layers are made of.

A tree is a nested dict whose keys are strings and whose leaves are anything
else. Layers produced by the loaders and by the command line are trees; they are
merged by [`load_config`][maxtev.config.load_config] before validation.

"""
from collections.abc import Mapping, Sequence
from typing import Any, NamedTuple

NodePath = Sequence[str]
Node = dict[str, Any]


class ItemPtr(NamedTuple):
    node: Node
    key: str


def split_path(path: str | NodePath) -> list[str]:
    """Normalize a dotted path (`"solver.nev"`) into its keys."""
    if isinstance(path, str):
        return path.split(".")
    return list(path)


def ensure_path_prefix(tree: Node, path: NodePath) -> ItemPtr:
    """Create the intermediate nodes of `path` and return a pointer to its leaf.

    NOTE: the tree is changed in-place.

    >>> tree = {"solver": {}}
    >>> ensure_path_prefix(tree, ("solver", "nev"))
    ItemPtr(node={}, key='nev')
    >>> ensure_path_prefix(tree, ("a", "b", "c"))
    ItemPtr(node={}, key='c')
    >>> tree == {"solver": {}, "a": {"b": {}}}
    True

    """
    if not path:
        raise ValueError("path must contain at least one element.")

    node = tree
    *partial_path, last_key = path
    for key in partial_path:
        node = node.setdefault(key, {})
    return ItemPtr(node, last_key)


def set_path(tree: Node, path: str | NodePath, value: Any) -> Node:
    """Set `value` at the dotted `path` of `tree` and return the tree."""
    node, key = ensure_path_prefix(tree, split_path(path))
    node[key] = value
    return tree


def envelop_subpath(tree: Node, subpath: NodePath) -> Node:
    """Return a new tree containing the previous one in a subpath."""

    for k in reversed(subpath):
        tree = {k: tree}
    return tree


def copy(tree: Node) -> Node:
    """Copy the dict structure of a tree.

    Every nested dict and every list is copied, leaves are shared. Lists are
    not copied recursively: list items are numbers or strings in run
    configurations.

    """
    tree = tree.copy()
    for k, v in tree.items():
        if isinstance(v, Mapping):
            tree[k] = copy(dict(v))
        elif isinstance(v, list):
            tree[k] = v.copy()
    return tree

"""Hierarchical run configuration.

A config is a tree of nested mappings, lists, and scalars (strings,
ints, floats, bools, null) stored on disk as YAML. A full run config
carries six top-level sections: ``dataset``, ``model``, ``loss``,
``optimizer``, ``scheduler``, ``runtime``. Files may start from a base
via ``inherit: <path>`` (resolved relative to the including file,
before anything else), and the CLI can patch single leaves with dotted
``key.path=value`` overrides applied last.
"""

import copy
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

import yaml

from .errors import ConfigError

__all__ = [
    "Config",
    "ParseError",
    "BadOverrideError",
    "TypeClashError",
    "load_config",
    "merge_config",
    "merge_trees",
    "apply_override",
    "parse_override",
]

RUN_SECTIONS = ("dataset", "model", "loss", "optimizer", "scheduler", "runtime")

INHERIT_KEY = "inherit"


class ParseError(ConfigError):
    """Config file is not valid YAML; message carries line/column."""


class BadOverrideError(ConfigError):
    """A dotted override path does not address an existing node."""


class TypeClashError(ConfigError):
    """Merging maps a key to a mapping in one tree and a scalar in the other."""


class Config(Mapping):
    """An immutable view over a loaded config tree.

    Behaves like a read-only mapping; ``to_dict`` hands out a deep copy
    for callers that need to mutate, and ``dump`` serializes back to an
    equivalent YAML tree.
    """

    def __init__(self, tree: Mapping[str, Any] | None = None):
        if tree is None:
            tree = {}
        if not isinstance(tree, Mapping):
            raise ConfigError(f"config root must be a mapping, got {type(tree).__name__}")
        self._tree = copy.deepcopy(dict(tree))

    def __getitem__(self, key: str) -> Any:
        return self._tree[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tree)

    def __len__(self) -> int:
        return len(self._tree)

    def __repr__(self) -> str:
        return f"Config({self._tree!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, Config):
            return self._tree == other._tree
        if isinstance(other, Mapping):
            return self._tree == dict(other)
        return NotImplemented

    def to_dict(self) -> dict:
        return copy.deepcopy(self._tree)

    def get_path(self, dotted: str, default: Any = None) -> Any:
        """Fetch ``a.b.c`` style paths; returns ``default`` when absent."""
        node: Any = self._tree
        for part in dotted.split("."):
            if not isinstance(node, Mapping) or part not in node:
                return default
            node = node[part]
        return node

    def dump(self) -> str:
        return yaml.safe_dump(self._tree, sort_keys=False, default_flow_style=False)

    def save(self, path) -> None:
        Path(path).write_text(self.dump())

    def validate_run_sections(self) -> None:
        missing = [s for s in RUN_SECTIONS if s not in self._tree]
        if missing:
            raise ConfigError(f"config is missing required sections: {missing}")


def merge_trees(base: Any, override: Any, _path: str = "") -> Any:
    """Recursively merge two trees; ``override`` wins on every leaf.

    Mappings merge key by key; scalars and lists in ``override`` replace
    the base value wholesale. A key mapping to a mapping in one tree and
    a non-mapping in the other raises :class:`TypeClashError`.
    """
    base_is_map = isinstance(base, Mapping)
    override_is_map = isinstance(override, Mapping)
    if base_is_map != override_is_map:
        raise TypeClashError(
            f"cannot merge at {_path or '<root>'!r}: "
            f"{type(base).__name__} vs {type(override).__name__}"
        )
    if not base_is_map:
        return copy.deepcopy(override)
    merged = {k: copy.deepcopy(v) for k, v in base.items()}
    for key, value in override.items():
        child_path = f"{_path}.{key}" if _path else key
        if key in merged:
            merged[key] = merge_trees(merged[key], value, child_path)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def merge_config(base: Mapping, override: Mapping) -> Config:
    """Merge two configs into a new one; pure function of its inputs."""
    return Config(merge_trees(dict(base), dict(override)))


def parse_override(spec: str) -> tuple[list[str], Any]:
    """Split ``a.b.c=value`` into a key path and a parsed scalar.

    The value is parsed with the same YAML scalar rules as config files,
    so ``lr=0.02`` yields a float and ``flag=true`` a bool.
    """
    if "=" not in spec:
        raise BadOverrideError(f"override {spec!r} is not of the form key.path=value")
    key, _, raw = spec.partition("=")
    key = key.strip()
    if not key:
        raise BadOverrideError(f"override {spec!r} has an empty key path")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError:
        value = raw
    return key.split("."), value


def apply_override(tree: dict, spec: str) -> dict:
    """Return a copy of ``tree`` with one dotted override applied.

    The path must address an existing node; the addressed node is
    replaced wholesale with the parsed value.
    """
    parts, value = parse_override(spec)
    new_tree = copy.deepcopy(tree)
    node = new_tree
    for part in parts[:-1]:
        if not isinstance(node, Mapping) or part not in node:
            raise BadOverrideError(f"override {spec!r}: path does not address a node")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise BadOverrideError(f"override {spec!r}: path does not address a node")
    node[leaf] = value
    return new_tree


def _load_yaml_file(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ParseError(f"cannot parse {path}{where}: {exc}") from exc
    if tree is None:
        tree = {}
    if not isinstance(tree, dict):
        raise ParseError(f"{path}: top level must be a mapping")
    return tree


def _resolve_inherit(path: Path, stack: tuple[Path, ...] = ()) -> dict:
    path = path.resolve()
    if path in stack:
        chain = " -> ".join(str(p) for p in (*stack, path))
        raise ConfigError(f"inherit cycle: {chain}")
    tree = _load_yaml_file(path)
    base_ref = tree.pop(INHERIT_KEY, None)
    if base_ref is None:
        return tree
    if not isinstance(base_ref, str):
        raise ConfigError(f"{path}: 'inherit' must be a path string, got {base_ref!r}")
    base_tree = _resolve_inherit((path.parent / base_ref), stack + (path,))
    return merge_trees(base_tree, tree)


def load_config(path, overrides: Sequence[str] = ()) -> Config:
    """Load a config file, resolve inheritance, then apply overrides.

    Overrides apply in order after the file (and its bases) are merged,
    so ``load_config(p, o1 + o2)`` equals applying ``o2`` on top of
    ``load_config(p, o1)``.
    """
    tree = _resolve_inherit(Path(path))
    for spec in overrides:
        tree = apply_override(tree, spec)
    return Config(tree)

"""String-keyed component registries and the config-driven builder.

Every pluggable component category (backbone, segmentor, dataset,
transform, loss, optimizer, scheduler) has its own :class:`Registry`.
Registering a class under a name makes ``build(registry, {"type": name,
...})`` construct it from a config node; adding a new algorithm is just
defining it in the matching module and registering it there.
"""

import inspect
from typing import Any, Callable, Mapping

from .errors import ConfigError

__all__ = [
    "Registry",
    "DuplicateNameError",
    "UnknownTypeError",
    "InvalidParamsError",
    "BACKBONES",
    "SEGMENTORS",
    "DATASETS",
    "TRANSFORMS",
    "LOSSES",
    "OPTIMIZERS",
    "SCHEDULERS",
]


class DuplicateNameError(ValueError):
    """A name was registered twice within one category."""


class UnknownTypeError(ConfigError):
    """A config node names a type that is not registered."""


class InvalidParamsError(ConfigError):
    """A config node carries keys the constructor does not accept."""


class Registry:
    """A case-sensitive name -> constructor table for one category.

    Registries are populated at import time and treated as immutable
    afterwards; lookups are safe from any thread.
    """

    def __init__(self, category: str):
        self.category = category
        self._entries: dict[str, Callable] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return sorted(self._entries)

    def register(self, name: str, constructor: Callable | None = None):
        """Register ``constructor`` under ``name``.

        Usable directly or as a class decorator::

            @SEGMENTORS.register("pspnet")
            class PSPNet(...): ...
        """
        if not isinstance(name, str) or not name:
            raise ValueError(
                f"registry {self.category!r}: name must be a nonempty string, got {name!r}"
            )
        if name in self._entries:
            raise DuplicateNameError(
                f"registry {self.category!r}: {name!r} is already registered"
            )

        def _add(ctor):
            self._entries[name] = ctor
            return ctor

        if constructor is None:
            return _add
        return _add(constructor)

    def get(self, name: str) -> Callable:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownTypeError(
                f"registry {self.category!r}: unknown type {name!r}; "
                f"valid names: {self.names()}"
            ) from None

    def build(self, node: Mapping[str, Any], **extra: Any):
        """Construct the component a config node describes.

        ``node`` must be a mapping with a string-valued ``type`` key; all
        remaining keys are passed to the constructor as keyword arguments.
        ``extra`` supplies caller-injected arguments (the node wins on
        clashes). Unknown keys fail with :class:`InvalidParamsError`
        rather than being dropped.
        """
        if not isinstance(node, Mapping):
            raise ConfigError(
                f"registry {self.category!r}: expected a mapping node, got {type(node).__name__}"
            )
        if "type" not in node:
            raise ConfigError(
                f"registry {self.category!r}: node has no 'type' key: {dict(node)!r}"
            )
        kwargs = {k: v for k, v in node.items() if k != "type"}
        for key, value in extra.items():
            kwargs.setdefault(key, value)
        ctor = self.get(node["type"])
        target = ctor.__init__ if inspect.isclass(ctor) else ctor
        try:
            if inspect.isclass(ctor):
                inspect.signature(target).bind(None, **kwargs)
            else:
                inspect.signature(target).bind(**kwargs)
        except TypeError as exc:
            raise InvalidParamsError(
                f"registry {self.category!r}: cannot build {node['type']!r}: {exc}"
            ) from None
        return ctor(**kwargs)


BACKBONES = Registry("backbone")
SEGMENTORS = Registry("segmentor")
DATASETS = Registry("dataset")
TRANSFORMS = Registry("transform")
LOSSES = Registry("loss")
OPTIMIZERS = Registry("optimizer")
SCHEDULERS = Registry("scheduler")

"""pixseg: a compact config-driven semantic segmentation toolbox.

Importing the package populates every component registry, so config
nodes like ``{type: pspnet, ...}`` are buildable immediately.
"""

from .config import Config, load_config, merge_config
from .registry import (
    BACKBONES,
    DATASETS,
    LOSSES,
    OPTIMIZERS,
    SCHEDULERS,
    SEGMENTORS,
    TRANSFORMS,
)

# importing the subpackages registers their components
from . import datasets  # noqa: E402,F401
from . import backbones  # noqa: E402,F401
from . import segmentors  # noqa: E402,F401
from . import losses  # noqa: E402,F401
from . import optim  # noqa: E402,F401
from . import engine  # noqa: E402,F401
from . import evaluation  # noqa: E402,F401
from . import runner  # noqa: E402,F401

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "Config",
    "DATASETS",
    "LOSSES",
    "OPTIMIZERS",
    "SCHEDULERS",
    "SEGMENTORS",
    "TRANSFORMS",
    "__version__",
    "load_config",
    "merge_config",
]

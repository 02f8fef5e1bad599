"""Checkpoint container: a single-file archive of named arrays + metadata.

The container is a zip of .npy entries (numpy's savez layout) with a
JSON metadata block under ``__meta__``. The metadata always carries a
``format_version``; loads reject unknown versions. All writes are
write-then-rename so a crash never leaves a corrupt file in place.
"""

import io
import json
import os
import tempfile
import zipfile
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

FORMAT_VERSION = 1

META_KEY = "__meta__"


class VersionMismatchError(CheckpointError):
    """Archive format version is not supported."""


class ShapeMismatchError(CheckpointError):
    """Parameter sets or shapes disagree; message names each offender."""


class CorruptFileError(CheckpointError):
    """File is unreadable as a checkpoint container."""


def save_archive(path, arrays: dict, meta: dict) -> None:
    """Atomically write arrays + metadata to ``path``."""
    meta = dict(meta)
    meta.setdefault("format_version", FORMAT_VERSION)
    payload = dict(arrays)
    payload[META_KEY] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_archive(path):
    """Read back (arrays, meta); raises CorruptFile / VersionMismatch."""
    path = Path(path)
    if not path.is_file():
        raise CorruptFileError(f"no such checkpoint file: {path}")
    try:
        with np.load(path, allow_pickle=False) as npz:
            data = {name: npz[name] for name in npz.files}
    except (zipfile.BadZipFile, ValueError, OSError, io.UnsupportedOperation) as exc:
        raise CorruptFileError(f"cannot read {path}: {exc}") from exc
    if META_KEY not in data:
        raise CorruptFileError(f"{path}: missing metadata block")
    try:
        meta = json.loads(bytes(data.pop(META_KEY)).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFileError(f"{path}: bad metadata block: {exc}") from exc
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version!r}, this build reads {FORMAT_VERSION}"
        )
    return data, meta


def model_arrays_to_state(model, arrays: dict, prefix: str = "model/"):
    """Match archive entries against a model's state dict, strictly.

    Returns {name: tensor-ready ndarray}; any missing, unexpected, or
    shape-mismatched parameter fails with a full per-name report.
    """
    state = model.state_dict()
    saved = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
    problems = []
    for name in state:
        if name not in saved:
            problems.append(f"missing from checkpoint: {name}")
        elif tuple(saved[name].shape) != tuple(state[name].shape):
            problems.append(
                f"shape mismatch: {name}: checkpoint {tuple(saved[name].shape)} "
                f"vs model {tuple(state[name].shape)}"
            )
    for name in saved:
        if name not in state:
            problems.append(f"not in model: {name}")
    if problems:
        raise ShapeMismatchError(
            "checkpoint does not fit the model:\n  " + "\n  ".join(problems)
        )
    return saved


def load_model_weights(model, path):
    """Load just the model weights from a checkpoint (for evaluation)."""
    import torch

    arrays, meta = load_archive(path)
    saved = model_arrays_to_state(model, arrays)
    state = model.state_dict()
    for name, value in saved.items():
        state[name].copy_(torch.from_numpy(value.copy()).to(state[name].dtype))
    return meta

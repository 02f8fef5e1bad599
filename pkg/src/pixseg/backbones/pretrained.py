"""Pretrained weight loading from the checkpoint container format."""

import torch


def load_pretrained(module, path):
    """Copy name-matched arrays from an archive into a module.

    Keys present in both the archive and the module load strictly by
    shape; archive keys the module lacks are ignored (the archive may
    hold a larger model). Returns the list of loaded parameter names.
    """
    from ..engine.checkpoint import ShapeMismatchError, load_archive

    arrays, _ = load_archive(path)
    state = module.state_dict()
    mismatched = []
    loaded = []
    for name, value in arrays.items():
        if name not in state:
            continue
        tensor = torch.from_numpy(value)
        if tuple(tensor.shape) != tuple(state[name].shape):
            mismatched.append(
                f"{name}: archive {tuple(tensor.shape)} vs model {tuple(state[name].shape)}"
            )
            continue
        state[name].copy_(tensor.to(state[name].dtype))
        loaded.append(name)
    if mismatched:
        raise ShapeMismatchError(
            "pretrained weights do not fit the model:\n  " + "\n  ".join(mismatched)
        )
    return loaded

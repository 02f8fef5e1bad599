import numpy as np
import pytest
import torch

from pixseg.config import load_config
from pixseg.datasets import generate_synthetic_dataset

CONFIG_DIR = None


def pytest_configure(config):
    global CONFIG_DIR
    from pathlib import Path

    CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR


@pytest.fixture(scope="session")
def tiny_data_root(tmp_path_factory):
    """Small synthetic dataset shared across tests: 24 train / 8 val, K=4."""
    root = tmp_path_factory.mktemp("tiny-ds")
    generate_synthetic_dataset(
        seed=7, count=32, size=(64, 64), num_classes=4, out_dir=root, val_count=8
    )
    return root


@pytest.fixture()
def seeded():
    torch.manual_seed(0)
    np.random.seed(0)
    yield


def load_tiny_config(name, data_root, extra_overrides=()):
    """Load a shipped tiny config pointed at a generated dataset."""
    overrides = [f"dataset.root={data_root}"] + list(extra_overrides)
    return load_config(CONFIG_DIR / name, overrides)

"""Deterministic iteration-based batch loading.

The training loop is iteration-based, so the loader maps an iteration
number straight to a batch: sample order comes from per-epoch
permutations of the dataset and every sample's augmentation generator
is seeded from (seed, iteration, slot). Batches are therefore a pure
function of (dataset, seed, iteration) — resuming at iteration t
replays exactly the stream an uninterrupted run would have seen.
"""

import numpy as np

from .sample import collate


class IterationLoader:
    """Maps iteration -> collated Batch deterministically."""

    def __init__(self, dataset, batch_size: int, seed: int = 0, shuffle: bool = True,
                 pad_value: float = 0.0, size_divisor: int = 32):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.shuffle = shuffle
        self.pad_value = pad_value
        self.size_divisor = size_divisor
        self._perm_cache: dict[int, np.ndarray] = {}

    def _permutation(self, epoch: int) -> np.ndarray:
        perm = self._perm_cache.get(epoch)
        if perm is None:
            if self.shuffle:
                perm = np.random.default_rng([self.seed, epoch]).permutation(len(self.dataset))
            else:
                perm = np.arange(len(self.dataset))
            self._perm_cache.clear()  # at most two epochs are ever live
            self._perm_cache[epoch] = perm
        return perm

    def sample_indices(self, iteration: int) -> list[int]:
        n = len(self.dataset)
        out = []
        for slot in range(self.batch_size):
            flat = iteration * self.batch_size + slot
            epoch, pos = divmod(flat, n)
            out.append(int(self._permutation(epoch)[pos]))
        return out

    def batch_at(self, iteration: int):
        samples = []
        for slot, index in enumerate(self.sample_indices(iteration)):
            rng = np.random.default_rng([self.seed, iteration, slot])
            samples.append(self.dataset.fetch(index, rng))
        return collate(
            samples,
            pad_value=self.pad_value,
            ignore_index=self.dataset.ignore_index,
            size_divisor=self.size_divisor,
        )

    __call__ = batch_at

"""In-process data parallelism by weighted gradient averaging.

Replicas start from identical parameters, each computes gradients on
its shard, and gradients are averaged weighted by each shard's valid
pixel weight, which makes the result equal the single-process gradient
on the concatenated batch (the pixel loss is a valid-pixel mean). All
replicas then apply the identical update. The contract is defined by
that equivalence, not by any communication primitive.
"""

import copy
import hashlib

import torch

from ..optim import build_optimizer, set_group_lrs
from .trainer import freeze_norm_stats


class DesyncDetectedError(RuntimeError):
    """Replica parameters diverged at a synchronization barrier."""


def parameter_checksum(model) -> str:
    """Order-stable digest of all parameters and buffers."""
    digest = hashlib.sha256()
    for name, tensor in model.state_dict().items():
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().numpy().tobytes())
    return digest.hexdigest()


def shard_batch(batch, n: int) -> list:
    """Contiguous shards partitioning one logical batch."""
    size = len(batch)
    if n < 1 or size < n:
        raise ValueError(f"cannot shard batch of {size} into {n} parts")
    base, remainder = divmod(size, n)
    shards = []
    start = 0
    for i in range(n):
        stop = start + base + (1 if i < remainder else 0)
        shards.append(batch.slice(start, stop))
        start = stop
    return shards


def data_parallel_step(models, optimizers, criterion, shards, lr,
                       check_sync: bool = True):
    """One synchronized step across replicas; returns loss breakdowns.

    Each (model, optimizer, shard) triple computes local gradients; the
    globally averaged gradient (weighted by the criterion's valid pixel
    weight) is installed on every replica before the identical step.
    """
    if not len(models) == len(optimizers) == len(shards):
        raise ValueError("models, optimizers and shards must align")
    grads_per_replica = []
    weights = []
    breakdowns = []
    for model, optimizer, shard in zip(models, optimizers, shards):
        set_group_lrs(optimizer, lr)
        optimizer.zero_grad(set_to_none=True)
        output = model(shard.images)
        total, breakdown, valid_weight = criterion(output, shard.masks)
        total.backward()
        grads = [
            p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
            for p in model.parameters()
        ]
        grads_per_replica.append(grads)
        weights.append(float(valid_weight))
        breakdowns.append(breakdown)

    total_weight = sum(weights)
    if total_weight == 0:
        weights = [1.0] * len(weights)
        total_weight = float(len(weights))
    averaged = []
    for per_param in zip(*grads_per_replica):
        acc = torch.zeros_like(per_param[0])
        for w, g in zip(weights, per_param):
            acc += (w / total_weight) * g
        averaged.append(acc)

    for model, optimizer in zip(models, optimizers):
        for p, g in zip(model.parameters(), averaged):
            p.grad = g.clone()
        optimizer.step()

    if check_sync:
        checksums = {parameter_checksum(m) for m in models}
        if len(checksums) > 1:
            raise DesyncDetectedError(
                f"replica parameters diverged after the synchronized step "
                f"({len(checksums)} distinct checksums)"
            )
    return breakdowns


class DataParallelGroup:
    """Replica harness over one model: shard, step, stay synchronized.

    Dropout layers are kept in eval mode: replica-count invariance needs
    sample-independent stochasticity, which global-RNG dropout is not.
    Normalization statistics are frozen for the same reason.
    """

    def __init__(self, model, n_replicas, criterion, optimizer_cfg, schedule):
        if n_replicas < 1:
            raise ValueError(f"n_replicas must be >= 1, got {n_replicas}")
        self.models = [model] + [copy.deepcopy(model) for _ in range(n_replicas - 1)]
        self.criterion = criterion
        self.schedule = schedule
        cfg = dict(optimizer_cfg)
        cfg.pop("grad_clip_norm", None)
        self.optimizers = [
            build_optimizer(m, cfg, schedule.lr_at(0)) for m in self.models
        ]
        self.iteration = 0

    def _prepare(self):
        for m in self.models:
            m.train()
            freeze_norm_stats(m)
            for mod in m.modules():
                if isinstance(mod, torch.nn.Dropout2d | torch.nn.Dropout):
                    mod.eval()

    def step(self, batch):
        self._prepare()
        shards = shard_batch(batch, len(self.models))
        lr = self.schedule.lr_at(self.iteration)
        breakdowns = data_parallel_step(
            self.models, self.optimizers, self.criterion, shards, lr
        )
        self.iteration += 1
        return breakdowns

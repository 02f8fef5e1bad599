"""Optimizer construction and the poly learning-rate schedule.

Parameters are partitioned into groups by selector (backbone / head /
norm / bias) with per-group lr and weight-decay multipliers; norm and
bias parameters default to weight_decay_mult 0. The only built-in
schedule is the poly policy with optional linear warmup.
"""

import torch
import torch.nn as nn
from torch.optim import AdamW

from .errors import ConfigError
from .registry import OPTIMIZERS, SCHEDULERS

__all__ = [
    "IterOutOfRangeError",
    "PolySchedule",
    "MomentumSGD",
    "build_schedule",
    "build_optimizer",
    "set_group_lrs",
    "classify_parameter",
]


class IterOutOfRangeError(ValueError):
    """Iteration outside [0, max_iters]."""


@SCHEDULERS.register("poly")
class PolySchedule:
    """lr(t) = min_lr + (base_lr - min_lr) * (1 - t_norm)^power after warmup.

    During warmup the rate climbs linearly from warmup_ratio * base_lr
    to base_lr; lr(warmup_iters) == base_lr and lr(max_iters) == min_lr
    exactly.
    """

    def __init__(self, base_lr, max_iters, min_lr=0.0, power=0.9,
                 warmup_iters=0, warmup_ratio=0.1):
        if not 0.0 <= min_lr <= base_lr:
            raise ConfigError(f"need 0 <= min_lr <= base_lr, got {min_lr} vs {base_lr}")
        if power <= 0:
            raise ConfigError(f"power must be > 0, got {power}")
        if not 0 <= warmup_iters < max_iters:
            raise ConfigError(
                f"need 0 <= warmup_iters < max_iters, got {warmup_iters} vs {max_iters}"
            )
        if not 0.0 < warmup_ratio <= 1.0:
            raise ConfigError(f"warmup_ratio must be in (0, 1], got {warmup_ratio}")
        self.base_lr = float(base_lr)
        self.min_lr = float(min_lr)
        self.power = float(power)
        self.max_iters = int(max_iters)
        self.warmup_iters = int(warmup_iters)
        self.warmup_ratio = float(warmup_ratio)

    def lr_at(self, iteration: int) -> float:
        if not 0 <= iteration <= self.max_iters:
            raise IterOutOfRangeError(
                f"iteration {iteration} outside [0, {self.max_iters}]"
            )
        if iteration < self.warmup_iters:
            start = self.warmup_ratio * self.base_lr
            return start + (self.base_lr - start) * iteration / self.warmup_iters
        span = self.max_iters - self.warmup_iters
        frac = (iteration - self.warmup_iters) / span
        return self.min_lr + (self.base_lr - self.min_lr) * (1.0 - frac) ** self.power


def build_schedule(cfg) -> PolySchedule:
    """Build from a scheduler config node keyed by ``policy``."""
    cfg = dict(cfg)
    policy = cfg.pop("policy", None)
    if policy is None:
        raise ConfigError("scheduler config needs a 'policy' key")
    return SCHEDULERS.build({"type": policy, **cfg})


@OPTIMIZERS.register("sgd")
class MomentumSGD(torch.optim.Optimizer):
    """SGD with momentum and decoupled weight decay.

    Update rule (documented contract):
        v <- momentum * v + g
        p <- p - lr * (v + weight_decay * p)
    """

    def __init__(self, params, lr, momentum=0.0, weight_decay=0.0):
        if lr < 0 or momentum < 0 or weight_decay < 0:
            raise ConfigError("lr, momentum and weight_decay must be >= 0")
        defaults = dict(lr=lr, momentum=momentum, weight_decay=weight_decay)
        super().__init__(params, defaults)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()
        for group in self.param_groups:
            momentum = group["momentum"]
            lr = group["lr"]
            wd = group["weight_decay"]
            for p in group["params"]:
                if p.grad is None:
                    continue
                g = p.grad
                if momentum != 0:
                    buf = self.state[p].get("momentum_buffer")
                    if buf is None:
                        buf = torch.zeros_like(p)
                        self.state[p]["momentum_buffer"] = buf
                    buf.mul_(momentum).add_(g)
                    g = buf
                p.add_(g + wd * p, alpha=-lr)
        return loss


OPTIMIZERS.register("adamw", AdamW)

_NORM_TYPES = (
    nn.BatchNorm1d,
    nn.BatchNorm2d,
    nn.BatchNorm3d,
    nn.SyncBatchNorm,
    nn.GroupNorm,
    nn.LayerNorm,
)


def classify_parameter(full_name: str, module, param_name: str) -> set:
    """Selector labels a parameter answers to."""
    labels = {"backbone" if full_name.startswith("backbone.") else "head"}
    if isinstance(module, _NORM_TYPES):
        labels.add("norm")
    if param_name == "bias":
        labels.add("bias")
    return labels


def _resolve_groups(model, group_specs):
    """First-match-wins partition of trainable parameters.

    Implicit trailing rules give norm and bias parameters
    weight_decay_mult 0 and everything else the default multipliers, so
    the partition is always total.
    """
    specs = []
    for spec in group_specs:
        spec = dict(spec)
        selector = spec.pop("selector", None)
        if selector not in ("backbone", "head", "norm", "bias"):
            raise ConfigError(f"param_groups: unknown selector {selector!r}")
        specs.append(
            (selector, float(spec.pop("lr_mult", 1.0)), float(spec.pop("weight_decay_mult", 1.0)))
        )
        if spec:
            raise ConfigError(f"param_groups: unexpected keys {sorted(spec)}")
    specs.append(("norm", 1.0, 0.0))
    specs.append(("bias", 1.0, 0.0))

    buckets = {i: [] for i in range(len(specs) + 1)}
    names = {i: [] for i in range(len(specs) + 1)}
    for module_name, module in model.named_modules():
        for param_name, param in module.named_parameters(recurse=False):
            if not param.requires_grad:
                continue
            full = f"{module_name}.{param_name}" if module_name else param_name
            labels = classify_parameter(full, module, param_name)
            slot = len(specs)  # default group
            for i, (selector, _, _) in enumerate(specs):
                if selector in labels:
                    slot = i
                    break
            buckets[slot].append(param)
            names[slot].append(full)
    groups = []
    for i in range(len(specs) + 1):
        if not buckets[i]:
            continue
        lr_mult, wd_mult = (specs[i][1], specs[i][2]) if i < len(specs) else (1.0, 1.0)
        groups.append(
            {"params": buckets[i], "lr_mult": lr_mult, "wd_mult": wd_mult, "names": names[i]}
        )
    return groups


def build_optimizer(model, cfg, base_lr: float):
    """Build the configured update rule over resolved parameter groups.

    ``cfg`` is the optimizer config node; ``base_lr`` comes from the
    schedule at iteration 0. Group entries expose ``lr_mult`` so the
    trainer can apply the schedule as group_lr = lr_at(t) * lr_mult.
    """
    cfg = dict(cfg)
    rule = cfg.pop("type", None)
    if rule is None:
        raise ConfigError("optimizer config needs a 'type' key")
    ctor = OPTIMIZERS.get(rule)
    group_specs = cfg.pop("param_groups", [])
    cfg.pop("grad_clip_norm", None)  # consumed by the trainer
    cfg.pop("base_lr", None)  # consumed by the schedule
    weight_decay = float(cfg.pop("weight_decay", 0.0))

    groups = _resolve_groups(model, group_specs)
    param_groups = []
    for g in groups:
        param_groups.append(
            {
                "params": g["params"],
                "lr": base_lr * g["lr_mult"],
                "weight_decay": weight_decay * g["wd_mult"],
                "lr_mult": g["lr_mult"],
                "names": g["names"],
            }
        )
    try:
        return ctor(param_groups, lr=base_lr, **cfg)
    except TypeError as exc:
        raise ConfigError(f"optimizer {rule!r}: {exc}") from None


def set_group_lrs(optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr * group.get("lr_mult", 1.0)

"""Iteration-based training loop with fp16 and checkpoint/resume support.

One logical training stream owns the parameters and optimizer state.
In deterministic mode (fixed seeds, single process) the loader derives
every batch from the iteration number and the torch RNG state is
checkpointed, so interrupt/resume replays the exact step stream of an
uninterrupted run.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from ..optim import build_optimizer, set_group_lrs
from .checkpoint import load_archive, model_arrays_to_state, save_archive
from .fp16 import DynamicLossScaler


class NonFiniteLossError(RuntimeError):
    """fp32 training hit a non-finite loss; aborting beats corrupting weights."""


@dataclass
class StepMetrics:
    iteration: int
    loss_total: float
    loss_main: float
    loss_aux: list
    lr: float
    loss_scale: float | None
    skipped: bool
    time: float
    extra: dict = field(default_factory=dict)

    def record(self) -> dict:
        rec = {
            "iteration": self.iteration,
            "loss_total": self.loss_total,
            "loss_main": self.loss_main,
            "loss_aux": self.loss_aux,
            "lr": self.lr,
            "loss_scale": self.loss_scale,
            "skipped": self.skipped,
            "time": self.time,
        }
        rec.update(self.extra)
        return rec


def freeze_norm_stats(model) -> None:
    """Put normalization layers in eval mode (frozen running statistics)."""
    for m in model.modules():
        if isinstance(m, (nn.modules.batchnorm._BatchNorm,)):
            m.eval()


class Trainer:
    """Owns model parameters, optimizer state, and the iteration counter.

    Args:
        model: the segmentor (fp32 at entry; converted in fp16 mode).
        criterion: SegmentationCriterion-like, returning
            (total, breakdown, valid_weight).
        optimizer_cfg: optimizer config node; may carry grad_clip_norm.
        schedule: learning-rate schedule (lr_at).
        loader: callable iteration -> Batch.
        fp16: run forward/backward in half precision with fp32 master
            parameters and dynamic loss scaling.
        freeze_norm: keep normalization statistics frozen while training
            (used by the data-parallel equivalence contract).
    """

    def __init__(self, model, criterion, optimizer_cfg, schedule, loader,
                 fp16=False, freeze_norm=False, work_dir=None, seed=0,
                 config_snapshot=None):
        self.model = model
        self.criterion = criterion
        self.schedule = schedule
        self.loader = loader
        self.fp16 = fp16
        self.freeze_norm = freeze_norm
        self.seed = seed
        self.config_snapshot = config_snapshot
        self.iteration = 0
        self.best_metric = None
        self.metric_history = []
        self.work_dir = Path(work_dir) if work_dir else None
        self._log_fh = None

        optimizer_cfg = dict(optimizer_cfg)
        self.grad_clip_norm = optimizer_cfg.pop("grad_clip_norm", None)
        self.optimizer = build_optimizer(model, optimizer_cfg, schedule.lr_at(0))

        self.scaler = None
        self._pairs = []  # (half model param, fp32 master) in named order
        self._param_names = [name for name, _ in model.named_parameters()]
        if fp16:
            self.scaler = DynamicLossScaler()
            self._setup_fp16()

    # -- fp16 plumbing -------------------------------------------------

    def _setup_fp16(self):
        mapping = {}
        for p in self.model.parameters():
            master = p.detach().clone().float()
            mapping[id(p)] = master
            self._pairs.append((p, master))
        self.model.half()
        for group in self.optimizer.param_groups:
            group["params"] = [mapping[id(p)] for p in group["params"]]

    def _master_by_name(self):
        return {
            name: master
            for name, (_, master) in zip(self._param_names, self._pairs)
        }

    # -- single step ---------------------------------------------------

    def train_step(self, batch=None) -> StepMetrics:
        t0 = time.perf_counter()
        if batch is None:
            batch = self.loader(self.iteration)
        lr = self.schedule.lr_at(self.iteration)
        set_group_lrs(self.optimizer, lr)

        self.model.train()
        if self.freeze_norm:
            freeze_norm_stats(self.model)

        images = batch.images.half() if self.fp16 else batch.images
        output = self.model(images)
        total, breakdown, _ = self.criterion(output, batch.masks)

        skipped = False
        if self.fp16:
            scale = self.scaler.scale
            self.optimizer.zero_grad(set_to_none=True)
            for p, _ in self._pairs:
                p.grad = None
            (total.float() * scale).backward()
            grads = [
                p.grad.float() if p.grad is not None else torch.zeros_like(m)
                for p, m in self._pairs
            ]
            found_inf = any(not torch.isfinite(g).all() for g in grads)
            if found_inf:
                skipped = True
            else:
                for (_, master), g in zip(self._pairs, grads):
                    master.grad = g.div_(scale)
                if self.grad_clip_norm:
                    torch.nn.utils.clip_grad_norm_(
                        [m for _, m in self._pairs], self.grad_clip_norm
                    )
                self.optimizer.step()
                for p, master in self._pairs:
                    p.data.copy_(master.data)
            self.scaler.update(found_inf)
            loss_scale = scale
        else:
            if not torch.isfinite(total):
                raise NonFiniteLossError(
                    f"non-finite loss at iteration {self.iteration}: {breakdown}"
                )
            self.optimizer.zero_grad(set_to_none=True)
            total.backward()
            if self.grad_clip_norm:
                torch.nn.utils.clip_grad_norm_(
                    self.model.parameters(), self.grad_clip_norm
                )
            self.optimizer.step()
            loss_scale = None

        metrics = StepMetrics(
            iteration=self.iteration,
            loss_total=float(total.detach()),
            loss_main=breakdown["main"],
            loss_aux=[v for k, v in breakdown.items() if k.startswith("aux")],
            lr=lr,
            loss_scale=loss_scale,
            skipped=skipped,
            time=time.perf_counter() - t0,
        )
        self.iteration += 1
        return metrics

    # -- full loop -----------------------------------------------------

    def fit(self, max_iters=None, checkpoint_interval=None, eval_interval=None,
            eval_fn=None, log_every=1, on_step=None):
        """Train to max_iters with periodic checkpoints and evaluation.

        ``eval_fn(model) -> float`` scores the val split (mIoU); the best
        value is tracked in the state. Returns the final StepMetrics.
        """
        max_iters = max_iters if max_iters is not None else self.schedule.max_iters
        last = None
        while self.iteration < max_iters:
            last = self.train_step()
            step_no = last.iteration + 1
            if log_every and step_no % log_every == 0:
                self._log(last.record())
            if on_step is not None:
                on_step(last)
            if eval_fn is not None and eval_interval and (
                step_no % eval_interval == 0 or step_no == max_iters
            ):
                score = float(eval_fn(self.model))
                self.metric_history.append([step_no, score])
                if self.best_metric is None or score > self.best_metric:
                    self.best_metric = score
                self._log({"iteration": last.iteration, "eval_miou": score})
            if checkpoint_interval and self.work_dir and (
                step_no % checkpoint_interval == 0 or step_no == max_iters
            ):
                self.save_checkpoint(
                    self.work_dir / "checkpoints" / f"iter_{step_no}.ckpt"
                )
        if self.work_dir:
            self.save_checkpoint(self.work_dir / "checkpoints" / "final.ckpt")
        self.close()
        return last

    def _log(self, record: dict) -> None:
        if self.work_dir is None:
            return
        if self._log_fh is None:
            log_dir = self.work_dir / "logs"
            log_dir.mkdir(parents=True, exist_ok=True)
            self._log_fh = open(log_dir / "train_log.jsonl", "a")
        self._log_fh.write(json.dumps(record) + "\n")
        self._log_fh.flush()

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # -- state ---------------------------------------------------------

    def _state_arrays(self) -> dict:
        arrays = {}
        if self.fp16:
            masters = self._master_by_name()
            for name, master in masters.items():
                arrays[f"model/{name}"] = master.detach().numpy().copy()
            for name, buf in self.model.named_buffers():
                value = buf.detach()
                if value.is_floating_point():
                    value = value.float()
                arrays[f"model/{name}"] = value.numpy().copy()
        else:
            for name, tensor in self.model.state_dict().items():
                arrays[f"model/{name}"] = tensor.detach().numpy().copy()
        for group in self.optimizer.param_groups:
            for name, param in zip(group["names"], group["params"]):
                for key, value in self.optimizer.state.get(param, {}).items():
                    if isinstance(value, torch.Tensor):
                        value = value.detach().numpy().copy()
                    arrays[f"optim/{key}/{name}"] = np.asarray(value)
        arrays["rng/torch_state"] = torch.get_rng_state().numpy().copy()
        return arrays

    def save_checkpoint(self, path) -> None:
        meta = {
            "iteration": self.iteration,
            "best_metric": self.best_metric,
            "metric_history": self.metric_history,
            "seed": self.seed,
            "fp16": self.fp16,
            "scaler": self.scaler.state() if self.scaler else None,
            "config": self.config_snapshot,
        }
        save_archive(path, self._state_arrays(), meta)

    def resume(self, path) -> dict:
        """Restore parameters, optimizer state, RNG, and counters."""
        arrays, meta = load_archive(path)
        saved = model_arrays_to_state(self.model, arrays)
        if self.fp16:
            masters = self._master_by_name()
            for name, value in saved.items():
                tensor = torch.from_numpy(value.copy())
                if name in masters:
                    masters[name].data.copy_(tensor)
                else:
                    # buffers live on the half model
                    dest = dict(self.model.named_buffers())[name]
                    dest.copy_(tensor.to(dest.dtype))
            for p, master in self._pairs:
                p.data.copy_(master.data)
        else:
            state = self.model.state_dict()
            for name, value in saved.items():
                state[name].copy_(torch.from_numpy(value.copy()).to(state[name].dtype))

        for group in self.optimizer.param_groups:
            for name, param in zip(group["names"], group["params"]):
                entries = {}
                prefix_len = len("optim/")
                for key in list(arrays):
                    if key.startswith("optim/") and key.endswith(f"/{name}"):
                        state_key = key[prefix_len: -(len(name) + 1)]
                        value = torch.from_numpy(arrays[key].copy())
                        if value.ndim == 0 and state_key == "step":
                            value = value.clone()
                        entries[state_key] = value
                if entries:
                    self.optimizer.state[param] = entries

        if "rng/torch_state" in arrays:
            torch.set_rng_state(torch.from_numpy(arrays["rng/torch_state"].copy()))
        self.iteration = int(meta["iteration"])
        self.best_metric = meta.get("best_metric")
        self.metric_history = list(meta.get("metric_history") or [])
        if self.scaler is not None and meta.get("scaler"):
            self.scaler.load_state(meta["scaler"])
        return meta

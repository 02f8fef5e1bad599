"""Assembles runnable objects from a validated config tree.

This is the glue between the config schema and the component
registries; both CLI commands and tests go through it so a config means
the same thing everywhere.
"""

from dataclasses import dataclass

import torch

from .config import Config
from .datasets import FolderDataset, IterationLoader
from .errors import ConfigError
from .evaluation import evaluate
from .losses import SegmentationCriterion
from .optim import PolySchedule, build_schedule
from .registry import SEGMENTORS
from .engine import Trainer


def set_random_state(seed: int, deterministic: bool = False) -> None:
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True)


def build_segmentor(cfg):
    model_cfg = cfg.get("model") or {}
    node = model_cfg.get("segmentor")
    if not isinstance(node, dict):
        raise ConfigError("config needs a model.segmentor mapping with a 'type' key")
    return SEGMENTORS.build(node)


def build_dataset(cfg, phase: str) -> FolderDataset:
    """phase is 'train' or 'val': picks that sub-node of the dataset section."""
    ds_cfg = dict(cfg.get("dataset") or {})
    if ds_cfg.get("type", "folder") != "folder":
        raise ConfigError(f"unknown dataset type {ds_cfg.get('type')!r}")
    phase_cfg = ds_cfg.get(phase)
    if not isinstance(phase_cfg, dict):
        raise ConfigError(f"dataset section has no {phase!r} sub-config")
    return FolderDataset(
        root=ds_cfg.get("root"),
        split=phase_cfg.get("split", phase),
        pipeline=phase_cfg.get("pipeline", ()),
    )


def build_schedule_from(cfg) -> PolySchedule:
    sched_cfg = dict(cfg.get("scheduler") or {})
    base_lr = (cfg.get("optimizer") or {}).get("base_lr")
    if base_lr is None:
        raise ConfigError("optimizer config needs base_lr")
    sched_cfg.setdefault("base_lr", base_lr)
    return build_schedule(sched_cfg)


@dataclass
class RunBundle:
    config: Config
    model: torch.nn.Module
    criterion: SegmentationCriterion
    schedule: PolySchedule
    train_dataset: FolderDataset
    val_dataset: FolderDataset | None
    loader: IterationLoader
    runtime: dict


def assemble_run(cfg: Config, seed: int | None = None, deterministic: bool | None = None,
                 fp16: bool | None = None) -> RunBundle:
    """Build everything a training run needs; validates cross-section facts.

    Seeds the torch RNG before constructing the model so that equal
    (config, seed) pairs produce identical initial parameters.
    """
    cfg.validate_run_sections()
    runtime = dict(cfg.get("runtime") or {})
    if seed is not None:
        runtime["seed"] = seed
    runtime.setdefault("seed", 0)
    if deterministic is not None:
        runtime["deterministic"] = deterministic
    if fp16 is not None:
        runtime["fp16"] = fp16
    set_random_state(int(runtime["seed"]), bool(runtime.get("deterministic", False)))

    model = build_segmentor(cfg)
    train_dataset = build_dataset(cfg, "train")
    try:
        val_dataset = build_dataset(cfg, "val")
    except ConfigError:
        val_dataset = None

    num_classes = getattr(model, "num_classes", None)
    if num_classes is not None and num_classes != train_dataset.num_classes:
        raise ConfigError(
            f"model has num_classes={num_classes} but the dataset descriptor "
            f"says {train_dataset.num_classes}"
        )

    criterion = SegmentationCriterion(cfg["loss"])
    if criterion.ignore_index != train_dataset.ignore_index:
        raise ConfigError(
            f"loss ignore_index={criterion.ignore_index} but the dataset uses "
            f"{train_dataset.ignore_index}"
        )
    schedule = build_schedule_from(cfg)
    loader = IterationLoader(
        train_dataset,
        batch_size=int(runtime.get("batch_size", 8)),
        seed=int(runtime["seed"]),
        shuffle=True,
        pad_value=float(runtime.get("pad_value", 0.0)),
        size_divisor=int(runtime.get("size_divisor", 32)),
    )
    return RunBundle(
        config=cfg,
        model=model,
        criterion=criterion,
        schedule=schedule,
        train_dataset=train_dataset,
        val_dataset=val_dataset,
        loader=loader,
        runtime=runtime,
    )


def make_eval_fn(bundle: RunBundle):
    """mIoU on the val split, or None when the config has no val data."""
    if bundle.val_dataset is None or len(bundle.val_dataset) == 0:
        return None
    runtime = bundle.runtime
    mode = runtime.get("eval_mode", "whole")

    def eval_fn(model):
        report = evaluate(
            model,
            bundle.val_dataset,
            mode=mode,
            window=runtime.get("eval_window"),
            stride=runtime.get("eval_stride"),
            size_divisor=int(runtime.get("size_divisor", 32)),
        )
        return report.miou

    return eval_fn


def make_trainer(bundle: RunBundle, work_dir=None, freeze_norm=False) -> Trainer:
    runtime = bundle.runtime
    fp16 = bool(runtime.get("fp16", False))
    deterministic = bool(runtime.get("deterministic", False))
    seed = int(runtime["seed"])
    snapshot = bundle.config.to_dict()
    snapshot.setdefault("runtime", {})
    snapshot["runtime"].update({"seed": seed, "fp16": fp16, "deterministic": deterministic})
    return Trainer(
        model=bundle.model,
        criterion=bundle.criterion,
        optimizer_cfg=bundle.config["optimizer"],
        schedule=bundle.schedule,
        loader=bundle.loader,
        fp16=fp16,
        freeze_norm=freeze_norm,
        work_dir=work_dir,
        seed=seed,
        config_snapshot=snapshot,
    )

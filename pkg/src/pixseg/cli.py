"""Command-line entry points: train, test, gen-data.

Every run's artifacts (config snapshot, checkpoints, logs, predictions,
metrics) live under one work directory. Failures exit nonzero with a
single greppable ``ERROR:<KIND>:`` line on stderr: CONFIG errors exit
2, checkpoint mismatches 4, anything else 3.
"""

import argparse
import os
import sys
from pathlib import Path

from .config import load_config
from .errors import CheckpointError, ConfigError
from .runner import assemble_run, build_segmentor, make_eval_fn, make_trainer
from .utils import atomic_write_text, parse_size

WORK_ROOT_ENV = "PIXSEG_WORK_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CHECKPOINT = 4


def _fail(kind: str, exc, code: int) -> int:
    message = str(exc).replace("\n", " | ")
    print(f"ERROR:{kind}: {message}", file=sys.stderr)
    return code


def _default_work_dir(config_path: str) -> Path:
    root = Path(os.environ.get(WORK_ROOT_ENV, "runs"))
    return root / Path(config_path).stem


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.set or [])
    work_dir = Path(args.work_dir) if args.work_dir else _default_work_dir(args.config)
    work_dir.mkdir(parents=True, exist_ok=True)

    bundle = assemble_run(
        cfg,
        seed=args.seed,
        deterministic=True if args.deterministic else None,
        fp16=True if args.fp16 else None,
    )
    trainer = make_trainer(bundle, work_dir=work_dir)
    # snapshot before the first step; re-feeding it reproduces the run
    import yaml

    atomic_write_text(work_dir / "config.yaml",
                      yaml.safe_dump(trainer.config_snapshot, sort_keys=False))
    if args.resume:
        trainer.resume(args.resume)

    runtime = bundle.runtime
    trainer.fit(
        max_iters=bundle.schedule.max_iters,
        checkpoint_interval=runtime.get("checkpoint_interval"),
        eval_interval=runtime.get("eval_interval"),
        eval_fn=make_eval_fn(bundle),
        log_every=int(runtime.get("log_interval", 1)),
    )
    if trainer.best_metric is not None:
        print(f"best val mIoU: {trainer.best_metric:.4f}")
    print(f"run artifacts in {work_dir}")
    return EXIT_OK


def cmd_test(args) -> int:
    from .engine import load_model_weights
    from .evaluation import evaluate
    from .runner import build_dataset

    cfg = load_config(args.config, args.set or [])
    cfg.validate_run_sections()
    model = build_segmentor(cfg)
    if not getattr(model, "needs_ground_truth", False) or any(
        True for _ in model.parameters()
    ):
        load_model_weights(model, args.checkpoint)
    runtime = dict(cfg.get("runtime") or {})
    dataset = build_dataset(cfg, args.split)

    mode = "slide" if args.slide else runtime.get("eval_mode", "whole")
    save_dir = None
    if args.save_pred:
        save_dir = Path(args.checkpoint).parent / "predictions"
    report = evaluate(
        model,
        dataset,
        mode=mode,
        window=runtime.get("eval_window"),
        stride=runtime.get("eval_stride"),
        size_divisor=int(runtime.get("size_divisor", 32)),
        save_dir=save_dir,
    )
    print(report.render())
    out_path = Path(args.out) if args.out else Path(args.checkpoint).parent / "metrics.yaml"
    atomic_write_text(out_path, report.dump_yaml())
    print(f"metrics written to {out_path}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    from .datasets import generate_synthetic_dataset

    size = parse_size(args.size)
    descriptor = generate_synthetic_dataset(
        seed=args.seed,
        count=args.count,
        size=size,
        num_classes=args.classes,
        out_dir=args.out,
        val_count=args.val_count,
    )
    print(
        f"wrote {args.count} samples ({len(descriptor)} train) "
        f"with {args.classes} classes to {args.out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixseg",
        description="Config-driven semantic segmentation: train, test, generate data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a segmentor from a config")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--work-dir", default=None,
                         help=f"run directory (default: ${WORK_ROOT_ENV}/<config stem>)")
    p_train.add_argument("--resume", default=None, help="checkpoint to resume from")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--deterministic", action="store_true")
    p_train.add_argument("--fp16", action="store_true")
    p_train.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                         help="override a config leaf (repeatable)")
    p_train.set_defaults(run=cmd_train)

    p_test = sub.add_parser("test", help="evaluate a checkpoint")
    p_test.add_argument("--config", required=True)
    p_test.add_argument("--checkpoint", required=True)
    p_test.add_argument("--split", default="val", choices=("train", "val", "test"))
    p_test.add_argument("--save-pred", action="store_true")
    p_test.add_argument("--slide", action="store_true")
    p_test.add_argument("--out", default=None, help="metrics file path")
    p_test.add_argument("--set", action="append", metavar="KEY.PATH=VALUE")
    p_test.set_defaults(run=cmd_test)

    p_gen = sub.add_parser("gen-data", help="generate the synthetic dataset")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--count", type=int, default=500)
    p_gen.add_argument("--size", default="64x64")
    p_gen.add_argument("--classes", type=int, default=4)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--val-count", type=int, default=100)
    p_gen.set_defaults(run=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except ConfigError as exc:
        return _fail("CONFIG", exc, EXIT_CONFIG)
    except CheckpointError as exc:
        return _fail("CHECKPOINT", exc, EXIT_CHECKPOINT)
    except KeyboardInterrupt:
        return _fail("RUNTIME", "interrupted", EXIT_RUNTIME)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        return _fail("RUNTIME", exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Subcommands:
  run     train once from a config file and/or flags
  grid    run a preset grid (noise | winsor), optionally at desk scale
  synth   generate a synthetic IDX dataset
  verify  run gradient/invariant self-checks
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, synth, verify


def _add_data_flags(p):
    p.add_argument("--data-dir", help="directory holding the four standard IDX files")
    p.add_argument("--train-images")
    p.add_argument("--train-labels")
    p.add_argument("--test-images")
    p.add_argument("--test-labels")


def _data_paths(args) -> dict:
    if args.data_dir:
        d = Path(args.data_dir)
        return {
            "train_images": str(d / "train-images-idx3-ubyte"),
            "train_labels": str(d / "train-labels-idx1-ubyte"),
            "test_images": str(d / "t10k-images-idx3-ubyte"),
            "test_labels": str(d / "t10k-labels-idx1-ubyte"),
        }
    paths = {
        "train_images": args.train_images,
        "train_labels": args.train_labels,
        "test_images": args.test_images,
        "test_labels": args.test_labels,
    }
    if not all(paths.values()):
        raise SystemExit("supply --data-dir or all four --*-images/--*-labels paths")
    return paths


_OVERRIDE_FLAGS = {
    "--seed": ("seed", int),
    "--noise": ("noise_fraction", float),
    "--winsor-c": ("winsor_c", float),
    "--steps": ("total_steps", int),
    "--learning-rate": ("learning_rate", float),
    "--minibatch": ("minibatch_size", int),
    "--hidden": ("hidden", lambda s: tuple(int(v) for v in s.split(","))),
    "--train-subset": ("train_subset", int),
    "--eval-every": ("eval_every", int),
    "--replicas": ("coherence_replicas", int),
    "--sample-coords": ("sample_coords", int),
    "--sample-examples": ("sample_examples", int),
    "--stat-mode": ("stat_mode", str),
    "--precision": ("precision", str),
    "--noise-mode": ("noise_mode", str),
    "--learned-rule": ("learned_rule", str),
    "--threads": ("threads", int),
    "--out-dir": ("out_dir", str),
}


def _add_override_flags(p):
    for flag, (dest, caster) in _OVERRIDE_FLAGS.items():
        p.add_argument(flag, dest=f"ov_{dest}", type=caster if caster is not str else None)


def _overrides(args) -> dict:
    out = {}
    for dest, _ in _OVERRIDE_FLAGS.values():
        value = getattr(args, f"ov_{dest}")
        if value is not None:
            out[dest] = value
    return out


def cmd_run(args) -> int:
    overrides = _overrides(args)
    if args.config:
        text = Path(args.config).read_text()
        if any(getattr(args, a) for a in ("data_dir", "train_images")):
            overrides.update(_data_paths(args))
        config = harness.parse_config_text(text, overrides)
    else:
        config = harness.TrainConfig(**_data_paths(args), **overrides)
    result = harness.run_experiment(config)
    last = -1
    print(
        f"done in {result.wall_seconds:.1f}s: ta={result.metrics.ta[last]:.4f} "
        f"va={result.metrics.va[last]:.4f} overfit={result.metrics.overfit[last]:.4f}"
        + (f" logs in {config.out_dir}" if config.out_dir else "")
    )
    return 0


def cmd_grid(args) -> int:
    data = _data_paths(args)
    maker = harness.noise_grid if args.kind == "noise" else harness.winsor_grid
    presets = maker(data, desk=args.desk, seed=args.ov_seed or 0, out_root=args.ov_out_dir or "runs")
    for preset in presets:
        result = harness.run_experiment(preset.config)
        print(
            f"{preset.name}: ta={result.metrics.ta[-1]:.4f} va={result.metrics.va[-1]:.4f} "
            f"overfit={result.metrics.overfit[-1]:.4f} proper={preset.proper_accuracy:.3f} "
            f"({result.wall_seconds:.0f}s)"
        )
    return 0


def cmd_synth(args) -> int:
    paths = synth.generate(args.out_dir, args.n_train, args.n_test, args.seed)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def cmd_verify(args) -> int:
    return 0 if verify.run_all() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train a single configuration")
    p_run.add_argument("--config", help="key = value config file")
    _add_data_flags(p_run)
    _add_override_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("grid", help="run a preset grid")
    p_grid.add_argument("kind", choices=("noise", "winsor"))
    p_grid.add_argument("--desk", action="store_true", help="reduced desk-scale presets")
    _add_data_flags(p_grid)
    _add_override_flags(p_grid)
    p_grid.set_defaults(func=cmd_grid)

    p_synth = sub.add_parser("synth", help="generate synthetic IDX data")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--n-train", type=int, default=12000)
    p_synth.add_argument("--n-test", type=int, default=2000)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.set_defaults(func=cmd_synth)

    p_verify = sub.add_parser("verify", help="run self-checks")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

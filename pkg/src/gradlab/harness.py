"""Experiment orchestration: config, training loop, logging, presets.

A run is fully determined by its TrainConfig.  The loop shuffles the
training subset once per epoch, takes consecutive minibatches, computes
per-example backprop state, records metrics and coherence statistics at
the evaluation cadence, and applies either the vanilla or the winsorized
update.  All logs are plain CSV with 9-significant-digit decimals so that
repeated runs are byte-identical.
"""

from __future__ import annotations

import contextlib
import dataclasses
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - optional speed knob
    threadpool_limits = None

from . import net, optim
from .coherence import CoherenceTracker, sample_coordinates, sampled_per_example_grads
from .dataset import NoisyDataset, RawDataset, inject_label_noise, load_idx, proper_accuracy
from .net import MlpParams, NonFiniteError, accuracy, backprop, dataset_loss, xavier_init
from .prng import Rng

METRICS_HEADER = "step,train_loss,ta,va,pristine_frac,corrupt_frac,overfit"
COHERENCE_HEADER = "step,world,f_p,f_c,i_p,i_c"
LEARNED_HEADER = "example,first_learned_step,pristine"
NEVER_LEARNED = -1


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int, detail: str):
        super().__init__(f"training diverged at step {step}: {detail}")
        self.step = step


@dataclass
class TrainConfig:
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str
    hidden: tuple = (256,)
    learning_rate: float = 0.1
    minibatch_size: int = 100
    total_steps: int = 10000
    noise_fraction: float = 0.0
    winsor_c: float = 0.0
    seed: int = 0
    train_subset: int = 0  # 0 means the full training set
    eval_every: int = 100
    eval_first: int = 10
    coherence_replicas: int = 3
    sample_coords: int = 600
    sample_examples: int = 400
    stat_mode: str = "minibatch"  # or "exact"
    precision: str = "float64"  # or "float32"
    noise_mode: str = "permute"  # or "resample"
    learned_rule: str = "first"  # or "persistent"
    threads: int = 0  # 0 means auto
    out_dir: str = ""

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ValueError("noise_fraction must be in [0, 1]")
        if not 0.0 <= self.winsor_c <= 50.0:
            raise ValueError("winsor_c must be in [0, 50]")
        if self.stat_mode not in ("minibatch", "exact"):
            raise ValueError(f"unknown stat_mode {self.stat_mode!r}")
        if self.precision not in ("float64", "float32"):
            raise ValueError(f"unknown precision {self.precision!r}")
        if self.noise_mode not in ("permute", "resample"):
            raise ValueError(f"unknown noise_mode {self.noise_mode!r}")
        if self.learned_rule not in ("first", "persistent"):
            raise ValueError(f"unknown learned_rule {self.learned_rule!r}")
        if self.eval_every < 1 or self.eval_first < 0:
            raise ValueError("bad evaluation cadence")

    @property
    def dtype(self):
        return np.float64 if self.precision == "float64" else np.float32

    def resolved_text(self) -> str:
        lines = []
        for f in sorted(dataclasses.fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "tuple":
        return tuple(int(v) for v in raw.split(",") if v.strip())
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str, overrides: dict | None = None) -> TrainConfig:
    """Parse flat `key = value` lines (# comments) into a TrainConfig."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected `key = value`")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw.strip())
    if overrides:
        values.update(overrides)
    return TrainConfig(**values)


def format_value(x) -> str:
    """Decimal with 9 significant digits; integers and nan pass through."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


@dataclass
class MetricsLog:
    steps: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    ta: list = field(default_factory=list)
    va: list = field(default_factory=list)
    pristine_frac: list = field(default_factory=list)
    corrupt_frac: list = field(default_factory=list)
    overfit: list = field(default_factory=list)
    correctness: list = field(default_factory=list)  # per eval, (N,) bool vs assigned

    def rows(self):
        for i, step in enumerate(self.steps):
            yield (
                step,
                self.train_loss[i],
                self.ta[i],
                self.va[i],
                self.pristine_frac[i],
                self.corrupt_frac[i],
                self.overfit[i],
            )


def eval_steps(total_steps: int, eval_every: int, eval_first: int) -> list:
    """Steps at which metrics/coherence are recorded (final step excluded)."""
    first = set(range(min(eval_first, total_steps)))
    cadence = set(range(0, total_steps, eval_every))
    return sorted(first | cadence)


def first_learned_tracking(steps, masks, rule: str = "first") -> np.ndarray:
    """Per example, the earliest evaluation step at which it counts as learned.

    rule "first": first evaluation where the prediction matches the
    assigned label.  rule "persistent": first evaluation after which every
    later evaluation also matches.  NEVER_LEARNED if no such step.
    """
    masks = np.asarray(masks, dtype=bool)
    steps = np.asarray(steps)
    if masks.shape[0] != len(steps):
        raise ValueError("one mask row per evaluation step required")
    n = masks.shape[1]
    out = np.full(n, NEVER_LEARNED, dtype=np.int64)
    if rule == "first":
        ever = masks.any(axis=0)
        first_idx = masks.argmax(axis=0)
        out[ever] = steps[first_idx[ever]]
        return out
    if rule != "persistent":
        raise ValueError(f"unknown learned rule {rule!r}")
    suffix_all = np.flip(np.logical_and.accumulate(np.flip(masks, axis=0), axis=0), axis=0)
    ever = suffix_all.any(axis=0)
    first_idx = suffix_all.argmax(axis=0)
    out[ever] = steps[first_idx[ever]]
    return out


@dataclass
class RunResult:
    config: TrainConfig
    noisy: NoisyDataset
    metrics: MetricsLog
    coherence_rows: list
    first_learned: np.ndarray
    params: MlpParams
    wall_seconds: float

    @property
    def pristine_count(self) -> int:
        return self.noisy.pristine_count

    @property
    def corrupt_count(self) -> int:
        return self.noisy.corrupt_count


def _load_train_test(config: TrainConfig):
    train = load_idx(config.train_images, config.train_labels)
    test = load_idx(config.test_images, config.test_labels, num_classes=train.num_classes)
    if config.train_subset:
        train = train.subset(config.train_subset)
    return train, test


def run_experiment(config: TrainConfig) -> RunResult:
    """Train per config; returns logs and writes CSVs if out_dir is set."""
    # winsorized runs hand the cores to the compiled kernel: idle BLAS
    # workers otherwise spin after every backprop GEMM and starve it
    limit_blas = config.winsor_c > 0 and threadpool_limits is not None
    with threadpool_limits(limits=1, user_api="blas") if limit_blas else contextlib.nullcontext():
        return _run_experiment(config)


def _run_experiment(config: TrainConfig) -> RunResult:
    t_start = time.perf_counter()
    train, test = _load_train_test(config)
    k_classes = train.num_classes
    rng = Rng(config.seed)

    noisy = inject_label_noise(
        train,
        config.noise_fraction,
        seed=int(rng.child("noise").u64(1)[0]),
        mode=config.noise_mode,
    )
    x_train = np.ascontiguousarray(train.images, dtype=config.dtype)
    y_assigned = noisy.assigned_labels
    n = train.count

    arch = [train.feature_dim, *config.hidden, k_classes]
    params = xavier_init(arch, seed=int(rng.child("init").u64(1)[0]), dtype=config.dtype)

    coord_sample = sample_coordinates(
        arch, config.sample_coords, seed=int(rng.child("coords").u64(1)[0])
    )
    if config.stat_mode == "exact":
        stat_examples = np.sort(
            rng.child("stat_examples").choice_no_replace(
                n, min(config.sample_examples, n)
            )
        )
        universe_mask = noisy.pristine_mask[stat_examples]
    else:
        stat_examples = None
        universe_mask = noisy.pristine_mask
    tracker = CoherenceTracker(
        universe_mask,
        replicas=config.coherence_replicas,
        seed=int(rng.child("null_worlds").u64(1)[0]),
    )

    metrics = MetricsLog()
    epsilon = config.noise_fraction

    def record_metrics(step: int, p: MlpParams):
        ta, correct = accuracy(p, x_train, y_assigned)
        va, _ = accuracy(p, test.images, test.labels)
        loss = dataset_loss(p, x_train, y_assigned)
        n_p = noisy.pristine_count
        n_c = noisy.corrupt_count
        p_frac = float(correct[noisy.pristine_mask].sum() / n_p) if n_p else float("nan")
        c_frac = float(correct[~noisy.pristine_mask].sum() / n_c) if n_c else float("nan")
        metrics.steps.append(step)
        metrics.train_loss.append(loss)
        metrics.ta.append(ta)
        metrics.va.append(va)
        metrics.pristine_frac.append(p_frac)
        metrics.corrupt_frac.append(c_frac)
        metrics.overfit.append(ta - (epsilon / k_classes + (1.0 - epsilon) * va))
        metrics.correctness.append(correct)

    evals = set(eval_steps(config.total_steps, config.eval_every, config.eval_first))
    shuffle_rng = rng.child("shuffle")
    winsor = (
        optim.WinsorConfig(config.winsor_c, config.learning_rate, config.minibatch_size)
        if config.winsor_c > 0
        else None
    )
    threads = config.threads or None

    order = None
    steps_per_epoch = (n + config.minibatch_size - 1) // config.minibatch_size
    for step in range(config.total_steps):
        pos = step % steps_per_epoch
        if pos == 0:
            order = shuffle_rng.child(step // steps_per_epoch).permutation(n)
        batch_idx = order[pos * config.minibatch_size : (pos + 1) * config.minibatch_size]
        if step in evals:
            record_metrics(step, params)
        try:
            state = backprop(params, x_train[batch_idx], y_assigned[batch_idx], batch_idx)
            if not np.isfinite(state.forward.mean_loss):
                raise NonFiniteError("non-finite loss")
            if step in evals:
                if config.stat_mode == "exact":
                    stat_state = backprop(
                        params,
                        x_train[stat_examples],
                        y_assigned[stat_examples],
                        stat_examples,
                    )
                    grads = sampled_per_example_grads(stat_state, coord_sample)
                    tracker.record(step, grads, np.arange(len(stat_examples)))
                else:
                    grads = sampled_per_example_grads(state, coord_sample)
                    tracker.record(step, grads, batch_idx)
            if winsor is not None:
                optim.winsorized_update(params, state, winsor, threads=threads)
            else:
                optim.apply_update(
                    params, state.batch_gradients(), config.learning_rate, len(batch_idx)
                )
        except NonFiniteError as err:
            raise TrainingDivergedError(step, str(err)) from err
    record_metrics(config.total_steps, params)

    first_learned = first_learned_tracking(
        metrics.steps, np.stack(metrics.correctness), config.learned_rule
    )
    result = RunResult(
        config=config,
        noisy=noisy,
        metrics=metrics,
        coherence_rows=tracker.rows(),
        first_learned=first_learned,
        params=params,
        wall_seconds=time.perf_counter() - t_start,
    )
    if config.out_dir:
        write_logs(result, config.out_dir)
    return result


def metrics_csv_text(metrics: MetricsLog) -> str:
    buf = io.StringIO()
    buf.write(METRICS_HEADER + "\n")
    for row in metrics.rows():
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def coherence_csv_text(rows) -> str:
    buf = io.StringIO()
    buf.write(COHERENCE_HEADER + "\n")
    for step, world, f_p, f_c, i_p, i_c in rows:
        buf.write(
            f"{step},{world},{format_value(f_p)},{format_value(f_c)},"
            f"{format_value(i_p)},{format_value(i_c)}\n"
        )
    return buf.getvalue()


def learned_csv_text(first_learned, pristine_mask) -> str:
    buf = io.StringIO()
    buf.write(LEARNED_HEADER + "\n")
    for i, step in enumerate(first_learned):
        buf.write(f"{i},{int(step)},{int(pristine_mask[i])}\n")
    return buf.getvalue()


def write_logs(result: RunResult, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / "metrics.csv",
        "coherence": out / "coherence.csv",
        "learned": out / "learned.csv",
        "config": out / "config.resolved",
        "checkpoint": out / "final.ckpt",
    }
    paths["metrics"].write_text(metrics_csv_text(result.metrics))
    paths["coherence"].write_text(coherence_csv_text(result.coherence_rows))
    paths["learned"].write_text(
        learned_csv_text(result.first_learned, result.noisy.pristine_mask)
    )
    paths["config"].write_text(result.config.resolved_text())
    result.params.save(paths["checkpoint"])
    return {k: str(v) for k, v in paths.items()}


NOISE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
WINSOR_LEVELS = (0, 1, 2, 4, 8)


@dataclass(frozen=True)
class Preset:
    name: str
    config: TrainConfig
    proper_accuracy: float


def _preset_name(prefix: str, eps: float, c=None) -> str:
    tag = f"{prefix}_eps{int(round(eps * 100)):03d}"
    if c is not None:
        tag += f"_c{int(c):02d}"
    return tag


def noise_grid(data_paths: dict, desk: bool = False, seed: int = 0, out_root: str = "") -> list:
    """Label-noise study presets: one run per noise level.

    Paper scale: 1x2048 hidden, 100k steps on the full training set.  Desk
    scale: 1x256 hidden, 10k-example subset, 10k steps.
    """
    presets = []
    for eps in NOISE_LEVELS:
        name = _preset_name("noise", eps)
        config = TrainConfig(
            **data_paths,
            hidden=(256,) if desk else (2048,),
            total_steps=10000 if desk else 100000,
            train_subset=10000 if desk else 0,
            noise_fraction=eps,
            seed=seed,
            out_dir=str(Path(out_root) / name) if out_root else "",
        )
        presets.append(Preset(name, config, proper_accuracy(eps, 10)))
    return presets


def winsor_grid(data_paths: dict, desk: bool = False, seed: int = 0, out_root: str = "") -> list:
    """Winsorization study presets: noise level x clip level grid.

    Paper scale: 3x256 hidden, 60k steps.  Desk scale: 3x64 hidden,
    10k-example subset, 10k steps.
    """
    presets = []
    for eps in NOISE_LEVELS:
        for c in WINSOR_LEVELS:
            name = _preset_name("winsor", eps, c)
            config = TrainConfig(
                **data_paths,
                hidden=(64, 64, 64) if desk else (256, 256, 256),
                total_steps=10000 if desk else 60000,
                train_subset=10000 if desk else 0,
                noise_fraction=eps,
                winsor_c=float(c),
                seed=seed,
                out_dir=str(Path(out_root) / name) if out_root else "",
            )
            presets.append(Preset(name, config, proper_accuracy(eps, 10)))
    return presets


def steps_to_accuracy(metrics: MetricsLog, level: float):
    """First logged step with training accuracy >= level; None if never."""
    for step, ta in zip(metrics.steps, metrics.ta):
        if ta >= level:
            return step
    return None

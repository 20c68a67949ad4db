import numpy as np
import pytest

from gradlab import harness
from gradlab.dataset import proper_accuracy
from gradlab.harness import (
    COHERENCE_HEADER,
    LEARNED_HEADER,
    METRICS_HEADER,
    NEVER_LEARNED,
    TrainConfig,
    TrainingDivergedError,
    eval_steps,
    first_learned_tracking,
    format_value,
    noise_grid,
    parse_config_text,
    run_experiment,
    steps_to_accuracy,
    winsor_grid,
)


def desk_config(small_data, **kw):
    base = dict(
        hidden=(16,),
        total_steps=60,
        minibatch_size=50,
        noise_fraction=0.3,
        eval_every=20,
        eval_first=5,
        sample_coords=40,
        seed=7,
    )
    base.update(kw)
    return TrainConfig(**small_data, **base)


def test_config_validation():
    good = dict(
        train_images="a", train_labels="b", test_images="c", test_labels="d"
    )
    TrainConfig(**good)
    for bad in (
        dict(total_steps=0),
        dict(minibatch_size=0),
        dict(learning_rate=0.0),
        dict(noise_fraction=1.5),
        dict(winsor_c=60.0),
        dict(stat_mode="psychic"),
        dict(precision="float16"),
        dict(noise_mode="x"),
        dict(learned_rule="x"),
        dict(eval_every=0),
    ):
        with pytest.raises(ValueError):
            TrainConfig(**good, **bad)


def test_parse_config_text_and_resolved_roundtrip():
    text = """
    # a comment
    hidden = 64,32
    learning_rate = 0.05
    total_steps = 123
    train_images = ti
    train_labels = tl
    test_images = vi
    test_labels = vl
    """
    config = parse_config_text(text)
    assert config.hidden == (64, 32)
    assert config.learning_rate == 0.05
    assert config.total_steps == 123
    again = parse_config_text(config.resolved_text())
    assert again == config
    override = parse_config_text(text, {"total_steps": 5})
    assert override.total_steps == 5


def test_parse_config_rejects_unknown_key_and_bad_lines():
    with pytest.raises(ValueError, match="unknown config key"):
        parse_config_text("nonsense = 1")
    with pytest.raises(ValueError, match="key = value"):
        parse_config_text("just words")


def test_eval_steps_cadence():
    steps = eval_steps(1000, 100, 10)
    assert steps[:10] == list(range(10))
    assert set(steps[10:]) == {100, 200, 300, 400, 500, 600, 700, 800, 900}
    assert eval_steps(5, 100, 10) == [0, 1, 2, 3, 4]


def test_format_value_nine_significant_digits():
    assert format_value(0.123456789123) == "0.123456789"
    assert format_value(1.0) == "1"
    assert format_value(float("nan")) == "nan"
    assert format_value(3) == "3"
    assert format_value(0.775) == "0.775"


def test_first_learned_tracking_hand_scan():
    steps = [0, 10, 20, 30]
    masks = np.array(
        [
            [True, False, False, False, False],
            [True, True, False, False, True],
            [True, True, False, False, False],
            [True, True, False, True, False],
        ]
    )
    first = first_learned_tracking(steps, masks, "first")
    assert list(first) == [0, 10, NEVER_LEARNED, 30, 10]
    persistent = first_learned_tracking(steps, masks, "persistent")
    assert list(persistent) == [0, 10, NEVER_LEARNED, 30, NEVER_LEARNED]


def test_first_learned_validation():
    with pytest.raises(ValueError):
        first_learned_tracking([0], np.zeros((2, 3), dtype=bool))
    with pytest.raises(ValueError):
        first_learned_tracking([0], np.zeros((1, 3), dtype=bool), "sometimes")


def test_run_is_deterministic_byte_for_byte(small_data, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    run_experiment(desk_config(small_data, out_dir=str(out_a)))
    run_experiment(desk_config(small_data, out_dir=str(out_b)))
    for name in ("metrics.csv", "coherence.csv", "learned.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
    assert (out_a / "final.ckpt").read_bytes() == (out_b / "final.ckpt").read_bytes()
    # resolved configs agree on everything except the output location
    strip = lambda p: [
        l for l in (p / "config.resolved").read_text().splitlines() if not l.startswith("out_dir")
    ]
    assert strip(out_a) == strip(out_b)


def test_run_seed_changes_logs(small_data):
    res_a = run_experiment(desk_config(small_data, seed=1))
    res_b = run_experiment(desk_config(small_data, seed=2))
    assert res_a.metrics.ta != res_b.metrics.ta


def test_metrics_accounting_and_overfit(small_data):
    config = desk_config(small_data)
    res = run_experiment(config)
    m = res.metrics
    n_p, n_c = res.pristine_count, res.corrupt_count
    assert n_p + n_c == 600
    k = 10
    for i, step in enumerate(m.steps):
        correct = m.correctness[i]
        learned_total = int(correct.sum())
        recomposed = m.pristine_frac[i] * n_p + m.corrupt_frac[i] * n_c
        assert round(recomposed) == learned_total
        expected_overfit = m.ta[i] - (
            config.noise_fraction / k + (1 - config.noise_fraction) * m.va[i]
        )
        assert abs(m.overfit[i] - expected_overfit) < 1e-12
        assert 0.0 <= m.ta[i] <= 1.0 and 0.0 <= m.va[i] <= 1.0
    # logged steps: eval cadence plus the final state
    assert m.steps == eval_steps(60, 20, 5) + [60]


def test_run_coherence_rows_partition_identity(small_data):
    res = run_experiment(desk_config(small_data))
    assert res.coherence_rows, "coherence log must not be empty"
    worlds = {r[1] for r in res.coherence_rows}
    assert worlds == {"real", "null_0", "null_1", "null_2"}
    for step, world, f_p, f_c, i_p, i_c in res.coherence_rows:
        if not np.isnan(f_p):
            assert abs(f_p + f_c - 1.0) < 1e-9


def test_exact_stat_mode_runs(small_data):
    res = run_experiment(
        desk_config(small_data, stat_mode="exact", sample_examples=100, total_steps=12)
    )
    steps = sorted({r[0] for r in res.coherence_rows})
    assert steps == eval_steps(12, 20, 5)
    for step, world, f_p, f_c, i_p, i_c in res.coherence_rows:
        assert abs(f_p + f_c - 1.0) < 1e-9


def test_winsorized_run_and_c0_equivalence(small_data):
    vanilla = run_experiment(desk_config(small_data, total_steps=30))
    routed = run_experiment(desk_config(small_data, total_steps=30, winsor_c=0.0))
    assert vanilla.metrics.ta == routed.metrics.ta
    clipped = run_experiment(desk_config(small_data, total_steps=30, winsor_c=4.0))
    assert clipped.metrics.ta != vanilla.metrics.ta


def test_float32_precision_runs(small_data):
    res = run_experiment(desk_config(small_data, precision="float32", total_steps=20))
    assert res.params.dtype == np.float32


def test_partial_final_minibatch(small_data):
    # 130 examples, minibatch 50: epochs of ceil(130/50)=3 steps with a
    # short 30-example batch, including the winsorized path (k recomputed)
    res = run_experiment(
        desk_config(
            small_data, train_subset=130, minibatch_size=50, total_steps=7, winsor_c=4.0
        )
    )
    assert res.metrics.steps[-1] == 7
    assert res.params.all_finite()


def test_divergence_reports_step(small_data):
    with pytest.raises(TrainingDivergedError) as err:
        run_experiment(desk_config(small_data, learning_rate=1e200, total_steps=50))
    assert err.value.step >= 0


def test_persistent_learned_rule(small_data):
    res = run_experiment(desk_config(small_data, learned_rule="persistent"))
    first = run_experiment(desk_config(small_data, learned_rule="first"))
    never = res.first_learned == NEVER_LEARNED
    both = ~never & (first.first_learned != NEVER_LEARNED)
    assert (res.first_learned[both] >= first.first_learned[both]).all()


def test_csv_headers_and_shapes(small_data, tmp_path):
    config = desk_config(small_data, out_dir=str(tmp_path / "run"))
    res = run_experiment(config)
    metrics = (tmp_path / "run" / "metrics.csv").read_text().splitlines()
    assert metrics[0] == METRICS_HEADER
    assert len(metrics) == 1 + len(res.metrics.steps)
    coherence = (tmp_path / "run" / "coherence.csv").read_text().splitlines()
    assert coherence[0] == COHERENCE_HEADER
    assert len(coherence) == 1 + len(res.coherence_rows)
    learned = (tmp_path / "run" / "learned.csv").read_text().splitlines()
    assert learned[0] == LEARNED_HEADER
    assert len(learned) == 1 + 600
    config_lines = (tmp_path / "run" / "config.resolved").read_text()
    assert parse_config_text(config_lines) == config


def test_noise_grid_presets():
    data = dict(train_images="a", train_labels="b", test_images="c", test_labels="d")
    presets = noise_grid(data, desk=False)
    assert len(presets) == 5
    assert [p.config.noise_fraction for p in presets] == [0.0, 0.25, 0.5, 0.75, 1.0]
    for p in presets:
        assert p.proper_accuracy == pytest.approx(
            proper_accuracy(p.config.noise_fraction, 10)
        )
        assert p.config.hidden == (2048,)
        assert p.config.total_steps == 100000
    desk = noise_grid(data, desk=True)
    for p in desk:
        assert p.config.hidden == (256,)
        assert p.config.total_steps == 10000
        assert p.config.train_subset == 10000


def test_winsor_grid_presets():
    data = dict(train_images="a", train_labels="b", test_images="c", test_labels="d")
    presets = winsor_grid(data, desk=False)
    assert len(presets) == 25
    cs = sorted({p.config.winsor_c for p in presets})
    assert cs == [0.0, 1.0, 2.0, 4.0, 8.0]
    for p in presets:
        assert p.config.hidden == (256, 256, 256)
        assert p.config.total_steps == 60000
    desk = winsor_grid(data, desk=True)
    assert len(desk) == 25
    assert desk[0].config.hidden == (64, 64, 64)
    names = [p.name for p in presets]
    assert len(set(names)) == 25


def test_steps_to_accuracy():
    m = harness.MetricsLog()
    m.steps = [0, 10, 20]
    m.ta = [0.1, 0.92, 0.99]
    assert steps_to_accuracy(m, 0.9) == 10
    assert steps_to_accuracy(m, 0.999) is None

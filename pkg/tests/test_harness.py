import csv
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hazardops.errors import ConfigurationError, ConvergenceError, DimensionError, StateError
from hazardops.excitation import GroundMotionParams
from hazardops.harness import (
    DatasetConfig,
    SampleSet,
    abs_err,
    build_dataset,
    emit_report,
    evaluate,
    format_table,
    mse,
    per_sample_mse,
    per_sample_rel_l2,
    read_metrics_csv,
    rel_l2,
    sample_seeds,
    split_assignment,
)
from hazardops.harness import dataset as dataset_mod
from hazardops.operators import DeepONet, Standardizer
from hazardops.structural import ShearBuildingModel

TOY_GM = GroundMotionParams(n_t=501, dt=0.05)
TOY_BUILDING = ShearBuildingModel(n_stories=2)


@pytest.fixture(scope="module")
def toy():
    return build_dataset(TOY_GM, TOY_BUILDING, DatasetConfig(n_samples=10))


# datasets ------------------------------------------------------------------
def test_single_default_record_shapes():
    ds = build_dataset(cfg=DatasetConfig(n_samples=1))
    assert ds.excitation.shape == (1, 5980)
    assert ds.response.shape == (1, 5980, 6)
    assert ds.time[0] == pytest.approx(21 * 0.005)


def test_toy_shapes(toy):
    assert toy.excitation.shape == (10, 480)
    assert toy.response.shape == (10, 480, 2)
    assert toy.manifest["n_t"] == 480 and toy.manifest["n_ch"] == 2


def test_rebuild_is_byte_identical(toy, tmp_path):
    again = build_dataset(TOY_GM, TOY_BUILDING, DatasetConfig(n_samples=10))
    assert again.equals(toy)
    a, b = tmp_path / "a", tmp_path / "b"
    toy.save(a)
    again.save(b)
    for name in sorted(os.listdir(a)):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_parallel_build_matches_serial(toy):
    par = build_dataset(TOY_GM, TOY_BUILDING, DatasetConfig(n_samples=10, workers=2, chunk=3))
    assert par.equals(toy)


def test_save_load_roundtrip_and_refusal(toy, tmp_path):
    path = toy.save(tmp_path / "set")
    back = SampleSet.load(path)
    assert back.equals(toy)
    assert back.manifest == toy.manifest
    assert (path / "response.csv").exists()
    with pytest.raises(FileExistsError):
        toy.save(path)
    toy.save(path, force=True)
    with pytest.raises(StateError):
        SampleSet.load(tmp_path / "nothing")


def test_block_layout_is_documented(toy, tmp_path):
    path = toy.save(tmp_path / "set")
    raw = (path / "excitation.f64").read_bytes()
    assert raw[:4] == b"HZAR"
    rank = int.from_bytes(raw[8:12], "little")
    shape = [int.from_bytes(raw[12 + 8 * i:20 + 8 * i], "little") for i in range(rank)]
    assert shape == [10, 480]
    data = np.frombuffer(raw[12 + 8 * rank:], dtype="<f8").reshape(shape)
    np.testing.assert_array_equal(data, toy.excitation)


def test_every_sample_regenerates_from_its_seed(toy):
    for i in (0, 7):
        full = toy.regenerate(i)
        np.testing.assert_array_equal(full[21:], toy.excitation[i])


def test_convergence_failure_retries_with_offset(monkeypatch):
    real = dataset_mod.simulate
    calls = {"n": 0}

    def flaky(building, cfg, ag, *args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise ConvergenceError("forced")
        return real(building, cfg, ag, *args, **kwargs)

    monkeypatch.setattr(dataset_mod, "simulate", flaky)
    cfg = DatasetConfig(n_samples=3)
    ds = build_dataset(TOY_GM, TOY_BUILDING, cfg)
    requested = sample_seeds(0, 3)
    assert ds.manifest["retries"] == [0, 1, 0]
    assert ds.manifest["seeds"] == [requested[0], (requested[1] + cfg.retry_offset) % 2 ** 32, requested[2]]
    np.testing.assert_array_equal(ds.regenerate(1)[21:], ds.excitation[1])


def test_retry_gives_up(monkeypatch):
    def never(*args, **kwargs):
        raise ConvergenceError("forced")

    monkeypatch.setattr(dataset_mod, "simulate", never)
    with pytest.raises(ConvergenceError):
        build_dataset(TOY_GM, TOY_BUILDING, DatasetConfig(n_samples=1, max_retries=2))


def test_default_split_counts():
    labels = split_assignment(1000, DatasetConfig().n_train, 0)
    assert labels.count("train") == 800 and labels.count("validation") == 200


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 300), frac=st.floats(0.0, 1.0), seed=st.integers(0, 2 ** 31))
def test_split_is_a_pure_disjoint_partition(n, frac, seed):
    n_train = int(round(frac * n))
    a = split_assignment(n, n_train, seed)
    assert a == split_assignment(n, n_train, seed)
    assert len(a) == n and set(a) <= {"train", "validation"}
    assert a.count("train") == n_train


def test_dataset_config_validation():
    with pytest.raises(ConfigurationError):
        DatasetConfig(n_samples=0)
    with pytest.raises(ConfigurationError):
        DatasetConfig(response="jerk")


# metrics -------------------------------------------------------------------
def test_metric_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert mse(y, y) == 0.0 and rel_l2(y, y) == 0.0
    np.testing.assert_array_equal(abs_err(y, y), 0.0)
    assert rel_l2(np.array([3.0, 4.0]), np.zeros(2)) == 1.0
    yh = np.array([1.0, 1.0, 5.0])
    assert mse(y, yh) == pytest.approx(5 / 3, abs=1e-15)
    assert rel_l2(y, yh) == pytest.approx(math.sqrt(5) / math.sqrt(14), abs=1e-15)
    np.testing.assert_array_equal(abs_err(y, yh), [0, 1, 2])


def test_metrics_reject_shape_mismatch():
    for fn in (mse, rel_l2, abs_err, per_sample_mse, per_sample_rel_l2):
        with pytest.raises(DimensionError):
            fn(np.zeros((2, 3)), np.zeros((3, 2)))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(-3.0, 3.0))
def test_metric_identities(seed, c):
    rng = np.random.default_rng(seed)
    y, yh = rng.standard_normal((4, 7)), rng.standard_normal((4, 7))
    assert abs(mse(y, yh) - np.mean(abs_err(y, yh) ** 2)) < 1e-12
    assert abs(rel_l2(y, c * y) - abs(1 - c)) < 1e-12
    assert rel_l2(y, yh) >= 0.0


def test_per_sample_metrics():
    y = np.array([[1.0, 1.0], [2.0, 0.0]])
    yh = np.array([[1.0, 3.0], [2.0, 0.0]])
    np.testing.assert_array_equal(per_sample_mse(y, yh), [2.0, 0.0])
    np.testing.assert_allclose(per_sample_rel_l2(y, yh), [2 / math.sqrt(2), 0.0])


# evaluation ----------------------------------------------------------------
class Replay:
    """Stand-in model returning fixed predictions for the evaluated inputs."""

    kind = "replay"

    def __init__(self, table, n_ch, floors=None):
        self.table = table
        self.n_ch = n_ch
        self.n_in = 1
        self.floors = floors
        self.trained = True

    def predict(self, x, batch_size=64):
        keys = [float(row[0]) for row in np.asarray(x)]
        return np.stack([self.table[k] for k in keys])


def _synthetic_set(truth, split=None):
    m, n_t, n_ch = truth.shape
    x = np.zeros((m, n_t))
    x[:, 0] = np.arange(m)  # sample id in the first entry
    return SampleSet(x, truth, np.arange(n_t) * 0.1, {"split": split or ["validation"] * m})


def _replay_for(ds, preds):
    return Replay({float(i): preds[i] for i in range(ds.n_samples)}, preds.shape[-1])


def test_evaluate_perfect_and_zero_predictors():
    truth = np.random.default_rng(0).standard_normal((4, 6, 2))
    ds = _synthetic_set(truth)
    r = evaluate(_replay_for(ds, truth), ds, timing=False)
    assert r.overall_mse == r.best_mse == r.worst_mse == r.rel_l2 == 0.0
    np.testing.assert_array_equal(r.per_sample_mse, 0.0)
    z = evaluate(_replay_for(ds, np.zeros_like(truth)), ds, timing=False)
    assert z.rel_l2 == pytest.approx(1.0, abs=1e-15)


def test_evaluate_three_samples_by_hand():
    truth = np.array([[1.0, 0.0], [2.0, 2.0], [0.0, 3.0]])[:, :, None]
    pred = np.array([[1.0, 1.0], [0.0, 2.0], [0.0, 0.0]])[:, :, None]
    ds = _synthetic_set(truth)
    r = evaluate(_replay_for(ds, pred), ds, timing=False)
    # per-sample squared errors: (0+1)/2, (4+0)/2, (0+9)/2
    np.testing.assert_array_equal(r.per_sample_mse, [0.5, 2.0, 4.5])
    assert r.overall_mse == pytest.approx(14 / 6)
    assert r.mean_sample_mse == pytest.approx(7 / 3)
    assert (r.best_mse, r.best_sample, r.worst_mse, r.worst_sample) == (0.5, 0, 4.5, 2)
    assert r.rel_l2 == pytest.approx(math.sqrt(14) / math.sqrt(18))
    assert r.best_mse <= r.mean_sample_mse <= r.worst_mse


def test_evaluate_uses_requested_floor_and_split():
    truth = np.random.default_rng(1).standard_normal((4, 5, 3))
    pred = truth.copy()
    pred[..., 0] += 1.0
    ds = _synthetic_set(truth, ["train", "validation", "validation", "train"])
    top = evaluate(_replay_for(ds, pred), ds, timing=False)
    first = evaluate(_replay_for(ds, pred), ds, floor=1, timing=False, split="train")
    assert top.floor == 3 and top.overall_mse == 0.0 and top.n_samples == 2
    assert first.overall_mse == pytest.approx(1.0) and list(first.sample_indices) == [0, 3]
    with pytest.raises(ConfigurationError):
        evaluate(_replay_for(ds, pred), ds, floor=4, timing=False)


def test_evaluate_rejects_layout_and_state_mismatch(toy):
    m = DeepONet(n_t=toy.n_t, n_ch=3)
    m.trained = True
    with pytest.raises(ConfigurationError):
        evaluate(m, toy, timing=False)
    d = DeepONet(n_t=toy.n_t)
    with pytest.raises(ConfigurationError):
        evaluate(d, toy, timing=False)  # untrained
    d.trained = True
    d.output_norm = Standardizer.identity(2)
    with pytest.raises(ConfigurationError):
        evaluate(d, toy, timing=False)


def test_report_monotonicity():
    rng = np.random.default_rng(2)
    truth = rng.standard_normal((4, 8, 1))
    pred = truth + 0.1 * rng.standard_normal(truth.shape)
    pred[3] = truth[3] + 5.0
    small = _synthetic_set(truth[:3])
    big = _synthetic_set(truth)
    r3 = evaluate(_replay_for(small, pred[:3]), small, timing=False)
    r4 = evaluate(_replay_for(big, pred), big, timing=False)
    assert mse(truth[3, :, 0], pred[3, :, 0]) > r3.worst_mse
    assert r4.worst_mse == pytest.approx(25.0) and r4.worst_sample == 3
    assert r4.overall_mse >= r3.overall_mse


def test_evaluate_timings(toy):
    truth = toy.response[..., -1:]
    table = {float(row[0]): truth[i] for i, row in enumerate(toy.excitation)}
    r = evaluate(Replay(table, 1), toy)
    for key in ("inference_per_sample", "inference_single", "oracle_per_sample", "speedup"):
        assert r.timings[key] > 0
    assert r.hardware["threads"] == 1


# reports -------------------------------------------------------------------
def _reports(n=4):
    truth = np.random.default_rng(3).standard_normal((3, 6, 1))
    ds = _synthetic_set(truth)
    out = []
    for k in range(n):
        pred = truth + 0.1 * (k + 1) * np.random.default_rng(k).standard_normal(truth.shape)
        out.append(evaluate(_replay_for(ds, pred), ds, name=f"model{k}", timing=False))
    return out


def test_empty_selection_gives_table_only(tmp_path):
    written = emit_report(_reports(1), tmp_path)
    names = sorted(p.name for p in written)
    assert "table.txt" in names and "metrics.csv" in names
    assert not any(n.startswith("trace_") for n in names)


def test_table_layout_four_models():
    lines = format_table(_reports(4)).splitlines()
    rows = [ln for ln in lines[2:] if ln.startswith("model")]
    assert len(rows) == 4
    for row in rows:
        cells = row.split()[1:]
        assert len(cells) == 4
        [float(c) for c in cells]


def test_metrics_csv_roundtrip(tmp_path):
    reports = _reports(3)
    emit_report(reports, tmp_path)
    back = read_metrics_csv(tmp_path / "metrics.csv")
    for r, row in zip(reports, back):
        assert row["name"] == r.name
        for key in r.NUMERIC:
            assert row[key] == getattr(r, key)


def test_traces_and_determinism(tmp_path):
    reports = _reports(2)
    a = emit_report(reports, tmp_path / "a", samples=["best", "worst", "1"])
    b = emit_report(reports, tmp_path / "b", samples=["best", "worst", "1"])
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    svg = next(p for p in a if p.suffix == ".svg").read_text()
    assert svg.startswith("<svg") and "log10 |error|" in svg
    trace = next(p for p in a if p.name.startswith("trace_") and p.suffix == ".csv")
    with open(trace) as fh:
        assert next(csv.reader(fh)) == ["time", "truth", "prediction", "log10_abs_err"]
    with pytest.raises(ValueError):
        emit_report(reports, tmp_path / "c", samples=["99"])


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report(_reports(1), blocker / "sub")

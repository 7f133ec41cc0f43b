import gc
import weakref

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from hazardops.autodiff import Tensor, backward
from hazardops.errors import ConfigurationError, DimensionError, StateError, TrainingError
from hazardops.operators import (
    DeepFNOnet,
    DeepONet,
    FNO,
    SAWeights,
    Standardizer,
    TrainSchedule,
    deepfnonet_train,
    deeponet_forward,
    fno_forward,
    lambda_ascent_step,
    load_checkpoint,
    read_checkpoint,
    sa_loss,
    save_checkpoint,
    standard_loss,
    train,
)

from oracles import deeponet_matrix_form, fno_direct_dft, linear_sdof_dataset


def _perturb(model, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    for t in model.trainable():
        t.values = t.values + scale * rng.standard_normal(t.shape)
    return model


def rel(pred, truth):
    return np.linalg.norm(pred - truth) / np.linalg.norm(truth)


# DeepONet ------------------------------------------------------------------
def test_deeponet_zero_branch_gives_bias():
    m = DeepONet(n_t=6, n_ch=2, p=3, branch_hidden=(4,), trunk_hidden=(4,))
    last = m.branch.layers[-1]
    last.weight.values[:] = 0.0
    last.bias.values[:] = 0.0
    m.bias.values = np.array([[0.5], [-1.25]])
    out = deeponet_forward(m, np.random.default_rng(0).standard_normal(6))
    np.testing.assert_array_equal(out[:, 0], 0.5)
    np.testing.assert_array_equal(out[:, 1], -1.25)


def test_deeponet_hand_evaluation_two_t():
    m = DeepONet(n_t=5, p=1, branch_hidden=(), trunk_hidden=(), activation="identity")
    m.branch.layers[0].weight.values[:] = 0.0
    m.branch.layers[0].bias.values[:] = 2.0
    m.trunk.layers[0].weight.values[:] = 1.0
    m.trunk.layers[0].bias.values[:] = 0.0
    times = np.linspace(0.0, 1.0, 5)
    out = deeponet_forward(m, np.ones(5), times)
    np.testing.assert_allclose(out[:, 0], 2 * times, atol=1e-15)


def test_deeponet_matches_matrix_form():
    m = _perturb(DeepONet(n_t=12, n_ch=2, p=4, branch_hidden=(8,), trunk_hidden=(8,), seed=5), 1)
    F = np.random.default_rng(2).standard_normal((3, 12))
    ref = deeponet_matrix_form(m.state(), F, m.times, 4, 2, "tanh")
    np.testing.assert_allclose(deeponet_forward(m, F), ref, atol=1e-12, rtol=0)


@settings(max_examples=20, deadline=None)
@given(p=st.integers(1, 6), n_ch=st.integers(1, 3), width=st.integers(1, 8), seed=st.integers(0, 10_000))
def test_deeponet_decomposition_property(p, n_ch, width, seed):
    m = _perturb(DeepONet(n_t=7, n_ch=n_ch, p=p, branch_hidden=(width,), trunk_hidden=(width,), seed=seed), seed)
    F = np.random.default_rng(seed).standard_normal((2, 7))
    ref = deeponet_matrix_form(m.state(), F, m.times, p, n_ch, "tanh")
    np.testing.assert_allclose(deeponet_forward(m, F), ref, atol=1e-12, rtol=0)


def test_deeponet_width_mismatch():
    m = DeepONet(n_t=8)
    with pytest.raises(ConfigurationError):
        deeponet_forward(m, np.zeros(9))
    with pytest.raises(ConfigurationError):
        DeepONet()


# FNO -----------------------------------------------------------------------
def _identity_fno(n_t=32):
    m = FNO(n_in=1, n_ch=1, d_v=1, n_layers=1, k_max=4, activation="identity", proj_hidden=())
    m.lift.layers[0].weight.values[:] = 1.0
    m.lift.layers[0].bias.values[:] = 0.0
    layer = m.layers[0]
    layer.weight_real.values[:] = 0.0
    layer.weight_imag.values[:] = 0.0
    layer.w.values[:] = 1.0
    layer.c.values[:] = 0.0
    m.proj.layers[0].weight.values[:] = 1.0
    m.proj.layers[0].bias.values[:] = 0.0
    return m


def test_fno_identity_configuration():
    x = np.random.default_rng(0).standard_normal((32, 1))
    np.testing.assert_allclose(fno_forward(_identity_fno(), x), x, atol=1e-15)


@pytest.mark.parametrize("n_t", [32, 33])
def test_fno_fourier_roundtrip(n_t):
    m = _identity_fno()
    m.layers = [type(m.layers[0])(1, n_t // 2 + 1, np.random.default_rng(0))]
    layer = m.layers[0]
    layer.weight_real.values[:] = 1.0
    layer.weight_imag.values[:] = 0.0
    layer.w.values[:] = 0.0
    layer.c.values[:] = 0.0
    x = np.random.default_rng(1).standard_normal((n_t, 1))
    np.testing.assert_allclose(fno_forward(m, x), x, atol=1e-12)


@pytest.mark.parametrize("k_max", [5, 33])
def test_fno_matches_direct_dft(k_max):
    m = _perturb(FNO(n_in=2, n_ch=3, d_v=6, n_layers=2, k_max=k_max, lift_hidden=(4,), proj_hidden=(7,),
                     seed=3), 4)
    X = np.random.default_rng(5).standard_normal((2, 64, 2))
    ref = fno_direct_dft(m.state(), X, 2, k_max, "gelu")
    np.testing.assert_allclose(fno_forward(m, X), ref, atol=1e-10, rtol=0)


def test_fno_k_max_too_large():
    m = FNO(k_max=18, d_v=4)
    with pytest.raises(ConfigurationError):
        fno_forward(m, np.zeros((32, 1)))
    m.check_length(34)
    with pytest.raises(ConfigurationError):
        FNO(bogus=1)


def test_fno_input_width_mismatch():
    with pytest.raises(ConfigurationError):
        fno_forward(FNO(n_in=2, d_v=4, k_max=2), np.zeros((16, 1)))


def test_forwards_are_deterministic():
    x = np.random.default_rng(0).standard_normal((3, 16, 1))
    a, b = FNO(d_v=4, k_max=4, seed=7), FNO(d_v=4, k_max=4, seed=7)
    np.testing.assert_array_equal(fno_forward(a, x), fno_forward(a, x))
    np.testing.assert_array_equal(fno_forward(a, x), fno_forward(b, x))
    d = DeepONet(n_t=16, seed=2)
    np.testing.assert_array_equal(deeponet_forward(d, x[..., 0]), deeponet_forward(d, x[..., 0]))


# losses --------------------------------------------------------------------
def test_standard_loss_examples():
    y = np.random.default_rng(0).standard_normal((2, 3, 1))
    assert standard_loss(Tensor(y), Tensor(y)).item() == 0.0
    pred = np.array([[[1.0], [-1.0]]])
    assert standard_loss(Tensor(pred), Tensor(np.zeros_like(pred))).item() == 2.0


def test_standard_loss_loop_oracle():
    rng = np.random.default_rng(1)
    p, t = rng.standard_normal((4, 5, 3)), rng.standard_normal((4, 5, 3))
    total = 0.0
    for i in range(4):
        for j in range(5):
            for c in range(3):
                total += (p[i, j, c] - t[i, j, c]) ** 2
    assert abs(standard_loss(Tensor(p), Tensor(t)).item() - total / (4 * 3)) < 1e-12


def test_losses_reject_shape_mismatch():
    with pytest.raises(DimensionError):
        standard_loss(Tensor(np.zeros((1, 2, 1))), Tensor(np.zeros((1, 3, 1))))
    with pytest.raises(DimensionError):
        sa_loss(Tensor(np.zeros((1, 2, 1))), Tensor(np.zeros((1, 2, 1))), SAWeights(3))


def test_sa_loss_examples():
    rng = np.random.default_rng(2)
    p, t = rng.standard_normal((3, 4, 2)), rng.standard_normal((3, 4, 2))
    assert abs(sa_loss(Tensor(p), Tensor(t), SAWeights(4)).item() - standard_loss(Tensor(p), Tensor(t)).item()) < 1e-14
    sa = SAWeights(4)
    sa.lam.values = np.array([[0.5], [3.0], [1.0], [2.0]])
    assert sa_loss(Tensor(t), Tensor(t), sa).item() == 0.0
    sa = SAWeights(2)
    sa.lam.values = np.array([[1.0], [2.0]])
    assert sa_loss(Tensor(np.array([[[1.0], [2.0]]])), Tensor(np.zeros((1, 2, 1))), sa).item() == 17.0


def test_sa_loss_gradient_wrt_lambda_matches_analytic_step():
    rng = np.random.default_rng(3)
    p, t = rng.standard_normal((3, 5, 2)), rng.standard_normal((3, 5, 2))
    sa = SAWeights(5, n_ch=2)
    sa.lam.values = rng.uniform(0.5, 2.0, (5, 1))
    backward(sa_loss(Tensor(p), Tensor(t), sa))
    tape_grad = sa.lam.grad.copy()
    before = sa.values.copy()
    lambda_ascent_step(sa, p, t)
    np.testing.assert_allclose((sa.values - before) / sa.lr, tape_grad, rtol=1e-12)


def test_lambda_step_examples():
    sa = SAWeights(3)
    lambda_ascent_step(sa, np.ones((2, 3, 1)), np.ones((2, 3, 1)))
    np.testing.assert_array_equal(sa.values, 1.0)
    r = 0.7
    sa = SAWeights(1, lr=0.1)
    lambda_ascent_step(sa, np.array([[[r]]]), np.zeros((1, 1, 1)))
    assert abs(sa.values[0, 0] - (1 + 0.1 * 2 * r * r)) < 1e-15


def test_lambda_argmax_follows_largest_residual():
    residual = np.array([0.1, -0.4, 0.2, 0.9, -0.3])[None, :, None]
    sa = SAWeights(5)
    for _ in range(100):
        lambda_ascent_step(sa, residual, np.zeros_like(residual))
    assert int(np.argmax(sa.values[:, 0])) == int(np.argmax(np.abs(residual[0, :, 0])))


def test_sa_weights_reject_bad_settings():
    with pytest.raises(ConfigurationError):
        SAWeights(3, init=0.0)
    with pytest.raises(ConfigurationError):
        SAWeights(3, mask="exp")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), steps=st.integers(1, 10), lr=st.floats(1e-4, 1.0))
def test_sa_positive_and_non_decreasing(seed, steps, lr):
    rng = np.random.default_rng(seed)
    sa = SAWeights(6, n_ch=2, lr=lr)
    for _ in range(steps):
        pred, truth = rng.standard_normal((2, 6, 2)), rng.standard_normal((2, 6, 2))
        before = sa.values.copy()
        lambda_ascent_step(sa, pred, truth)
        assert np.all(sa.g().values >= 0)
        assert np.all(sa.values > before)


def test_min_max_directionality():
    rng = np.random.default_rng(4)
    model = FNO(d_v=4, k_max=4, n_layers=1, proj_hidden=(8,), seed=1)
    x, y = Tensor(rng.standard_normal((4, 16, 1))), Tensor(rng.standard_normal((4, 16, 1)))
    sa = SAWeights(16, lr=1e-2)
    sa.lam.values = rng.uniform(0.5, 1.5, (16, 1))

    def loss_value():
        return sa_loss(model.forward(x), y, sa).item()

    base = loss_value()
    # lambda step alone: weakly increases the loss
    saved_lam = sa.values.copy()
    lambda_ascent_step(sa, model.forward(x), y)
    assert loss_value() >= base
    sa.lam.values = saved_lam
    # theta step alone: decreases the loss for a small enough step
    params = model.trainable()
    for p in params:
        p.grad = None
    backward(sa_loss(model.forward(x), y, sa))
    start = [p.values.copy() for p in params]
    grads = [np.zeros_like(p.values) if p.grad is None else p.grad.copy() for p in params]
    lr, decreased = 1e-2, False
    for _ in range(30):
        for p, s, g in zip(params, start, grads):
            p.values = s - lr * g
        if loss_value() < base:
            decreased = True
            break
        lr /= 2
    assert decreased


# training ------------------------------------------------------------------
def test_zero_epochs_leaves_parameters():
    x, y, _ = linear_sdof_dataset(10, n_t=32)
    m = FNO(d_v=4, k_max=4, n_layers=1)
    before = m.state()
    result = train(m, (x, y), TrainSchedule(epochs=0))
    for k, v in m.state().items():
        np.testing.assert_array_equal(v, before[k])
    assert result.history["train_loss"] == []


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises_and_restores_last_good():
    x, y, _ = linear_sdof_dataset(10, n_t=32)
    m = FNO(d_v=4, k_max=4, n_layers=1, activation="relu")
    with pytest.raises(TrainingError) as info:
        train(m, (x, y), TrainSchedule(epochs=50, lr=1e150, batch_size=5))
    state = info.value.state
    for k, v in m.state().items():
        assert np.all(np.isfinite(v))
        np.testing.assert_array_equal(v, state[k])


def test_train_rejects_mismatched_targets():
    x, y, _ = linear_sdof_dataset(4, n_t=32)
    with pytest.raises(DimensionError):
        train(FNO(d_v=4, k_max=4, n_ch=2), (x, y), TrainSchedule(epochs=1))
    with pytest.raises(DimensionError):
        train(FNO(d_v=4, k_max=4), (x, y[:, :16]), TrainSchedule(epochs=1))


def test_training_is_reproducible():
    x, y, _ = linear_sdof_dataset(12, n_t=32)
    runs = []
    for _ in range(2):
        m = FNO(d_v=4, k_max=4, n_layers=1, seed=3)
        r = train(m, (x, y), TrainSchedule(epochs=3, batch_size=4, sa=True, seed=9))
        runs.append((m.state(), r.sa.values.copy(), r.history["train_loss"]))
    for k in runs[0][0]:
        np.testing.assert_array_equal(runs[0][0][k], runs[1][0][k])
    np.testing.assert_array_equal(runs[0][1], runs[1][1])
    assert runs[0][2] == runs[1][2]


def test_lambda_history_non_decreasing():
    x, y, _ = linear_sdof_dataset(12, n_t=32)
    r = train(FNO(d_v=4, k_max=4, n_layers=1), (x, y),
              TrainSchedule(epochs=4, batch_size=4, sa=True, record_lambda=True))
    hist = np.array(r.lambda_history)
    assert hist.shape == (5, 32, 1)
    assert np.all(np.diff(hist, axis=0) > 0)


def test_backward_releases_graph():
    m = FNO(d_v=4, k_max=4, n_layers=1)
    x = Tensor(np.random.default_rng(0).standard_normal((2, 16, 1)))
    out = m.forward(x)
    probe = weakref.ref(out)
    loss = (out * out).sum()
    backward(loss)
    del out
    gc.collect()
    assert probe() is None
    assert all(p.grad is not None for p in m.trainable())


def test_standardizer_roundtrip():
    y = np.random.default_rng(0).normal(3.0, 2.0, (5, 20, 3))
    s = Standardizer.fit(y)
    z = s.transform(y)
    np.testing.assert_allclose(z.mean(axis=(0, 1)), 0.0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=(0, 1)), 1.0, atol=1e-12)
    np.testing.assert_allclose(s.inverse(z), y, atol=1e-12)


# linear SDOF runs ----------------------------------------------------------
TINY = dict(n_in=1, n_ch=1, n_layers=2, d_v=16, k_max=8)


@pytest.fixture(scope="module")
def sdof():
    x, y, t = linear_sdof_dataset(200)
    return x[:160], y[:160], x[160:], y[160:]


@pytest.fixture(scope="module")
def sdof_fno(sdof):
    xt, yt, xv, yv = sdof
    m = FNO(**TINY)
    train(m, (xt, yt), TrainSchedule(epochs=500), validation=(xv, yv))
    return m


@pytest.mark.slow
def test_tiny_fno_learns_linear_sdof(sdof, sdof_fno):
    _, _, xv, yv = sdof
    assert rel(sdof_fno.predict(xv), yv) < 0.1


@pytest.mark.slow
def test_sa_weights_concentrate_on_hard_times(sdof, sdof_fno):
    xt, yt, xv, yv = sdof
    m = FNO(**TINY)
    r = train(m, (xt, yt), TrainSchedule(epochs=500, sa=True), validation=(xv, yv))
    lam = r.sa.values[:, 0]
    assert lam.max() > 1.05 * lam.min()
    err_t = ((sdof_fno.predict(xt) - yt) ** 2).mean(axis=(0, 2))
    assert scipy.stats.spearmanr(lam, err_t)[0] > 0.3


@pytest.fixture(scope="module")
def sdof_deeponet(sdof):
    xt, yt, xv, yv = sdof
    d = DeepONet(n_t=xt.shape[1])
    train(d, (xt, yt), TrainSchedule(epochs=500), validation=(xv, yv))
    return d


@pytest.mark.slow
def test_hybrid_beats_its_deeponet(sdof, sdof_deeponet):
    xt, yt, xv, yv = sdof
    before = sdof_deeponet.state()
    hybrid, (r1, r2) = deepfnonet_train(sdof_deeponet, dict(n_layers=2, d_v=16, k_max=8), (xt, yt),
                                        (None, TrainSchedule(epochs=500)), validation=(xv, yv),
                                        train_stage1=False)
    assert r1 is None and hybrid.trained
    for k, v in sdof_deeponet.state().items():
        assert v.tobytes() == before[k].tobytes()
    assert rel(hybrid.predict(xv), yv) < rel(sdof_deeponet.predict(xv), yv)


@pytest.mark.slow
def test_resolution_consistency(sdof, sdof_fno):
    _, _, xv, _ = sdof
    n = xv.shape[1]
    spec = np.fft.rfft(xv, axis=1)
    fine = np.fft.irfft(spec, 2 * n, axis=1) * 2  # band-limited 2x interpolation
    coarse = sdof_fno.predict(xv)
    up = sdof_fno.predict(fine)[:, ::2]
    assert rel(up, coarse) < 0.05


# hybrid and checkpoints ----------------------------------------------------
def _trained_pair(tmp_path, n=16, epochs=2):
    x, y, _ = linear_sdof_dataset(12, n_t=n)
    d = DeepONet(n_t=n, p=4, branch_hidden=(8,), trunk_hidden=(8,))
    hybrid, _ = deepfnonet_train(d, dict(d_v=4, k_max=4, n_layers=1), (x, y),
                                 (TrainSchedule(epochs=epochs), TrainSchedule(epochs=epochs)))
    return hybrid, x


def test_hybrid_identity_composition():
    n = 16
    d = DeepONet(n_t=n, p=4, branch_hidden=(8,), trunk_hidden=(8,))
    d.trained = True
    f = np.random.default_rng(0).standard_normal((3, n))
    s2 = FNO(n_in=2, n_ch=1, d_v=1, n_layers=1, k_max=2, activation="identity", proj_hidden=())
    # lift picks the DeepONet channel, the layer passes it through
    s2.lift.layers[0].weight.values = np.array([[0.0, 1.0]])
    s2.lift.layers[0].bias.values[:] = 0.0
    s2.layers[0].weight_real.values[:] = 0.0
    s2.layers[0].weight_imag.values[:] = 0.0
    s2.layers[0].w.values[:] = 1.0
    s2.layers[0].c.values[:] = 0.0
    s2.proj.layers[0].weight.values[:] = 1.0
    s2.proj.layers[0].bias.values[:] = 0.0
    h = DeepFNOnet(d, s2)
    np.testing.assert_allclose(h.predict(f), d.predict(f), atol=1e-13)


def test_hybrid_rejects_bad_wiring():
    d = DeepONet(n_t=8)
    with pytest.raises(ConfigurationError):
        DeepFNOnet(d, FNO(n_in=1, d_v=4, k_max=2))
    with pytest.raises(ConfigurationError):
        DeepFNOnet(d, FNO(n_in=2, n_ch=3, d_v=4, k_max=2), residual=True)
    with pytest.raises(StateError):
        deepfnonet_train(d, {}, (np.zeros((2, 8)), np.zeros((2, 8, 1))), train_stage1=False)


def test_hybrid_residual_mode_adds_stage1():
    x, y, _ = linear_sdof_dataset(12, n_t=16)
    d = DeepONet(n_t=16, p=4, branch_hidden=(8,), trunk_hidden=(8,))
    h, _ = deepfnonet_train(d, dict(d_v=4, k_max=4, n_layers=1), (x, y),
                            (TrainSchedule(epochs=2), TrainSchedule(epochs=2)), residual=True)
    x2, g = h.stage2_inputs(x)
    np.testing.assert_allclose(h.predict(x), h.stage2.predict(x2) + g, atol=1e-13)


def test_checkpoint_roundtrip(tmp_path):
    x, y, _ = linear_sdof_dataset(12, n_t=32)
    m = FNO(d_v=4, k_max=4, n_layers=1)
    r = train(m, (x, y), TrainSchedule(epochs=2, sa=True))
    path = tmp_path / "fno.ckpt"
    save_checkpoint(path, m, schedule=TrainSchedule(epochs=2, sa=True), sa=r.sa)
    loaded, head, lam = load_checkpoint(path)
    assert loaded.trained and head["kind"] == "fno"
    np.testing.assert_array_equal(lam, r.sa.values)
    np.testing.assert_array_equal(loaded.predict(x), m.predict(x))
    head2, arrays = read_checkpoint(path)
    assert [q["name"] for q in head2["parameters"]] == [name for name, _ in m.parameters()]
    assert len(arrays) == len(head2["parameters"]) + 1


def test_checkpoint_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(StateError):
        load_checkpoint(bad)
    with pytest.raises(StateError):
        load_checkpoint(tmp_path / "missing.ckpt")


def test_hybrid_checkpoint_tracks_stage1(tmp_path):
    hybrid, x = _trained_pair(tmp_path)
    p1, p2 = tmp_path / "s1.ckpt", tmp_path / "s2.ckpt"
    with pytest.raises(StateError):
        save_checkpoint(p2, hybrid, stage1_path=p1)
    save_checkpoint(p1, hybrid.stage1)
    save_checkpoint(p2, hybrid, stage1_path=p1)
    loaded, _, _ = load_checkpoint(p2)
    np.testing.assert_array_equal(loaded.predict(x), hybrid.predict(x))
    # a retrained stage 1 invalidates the stage-2 file
    hybrid.stage1.bias.values = hybrid.stage1.bias.values + 1.0
    save_checkpoint(p1, hybrid.stage1)
    with pytest.raises(StateError):
        load_checkpoint(p2)
    p1.unlink()
    with pytest.raises(StateError):
        load_checkpoint(p2)

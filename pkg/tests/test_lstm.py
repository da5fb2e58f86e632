import math

import numpy as np
import pytest

from seqfusion.exceptions import DimensionError, TrainingError
from seqfusion.hmm import PairedGenerative
from seqfusion.lstm import (
    LstmNet,
    RmsPropState,
    TrainConfig,
    clip_by_global_norm,
    init_lstm,
    loss_and_grads,
    lstm_activations,
    lstm_activations_batch,
    lstm_classifier_fit,
    lstm_classify,
    lstm_classify_batch,
    lstm_fit,
    lstm_forward,
    lstm_mse,
    lstm_mse_batch,
    lstm_ratio,
    lstm_ratio_batch,
    rmsprop_step,
)


def random_net(n_inputs=2, n_units=4, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    H = n_units
    return LstmNet(
        rng.normal(0, scale, (n_inputs + H, 4 * H)),
        rng.normal(0, scale, 4 * H),
        rng.normal(0, scale, (H, n_inputs)),
        rng.normal(0, scale, n_inputs),
    )


def zero_net(n_inputs, n_units):
    return LstmNet(np.zeros((n_inputs + n_units, 4 * n_units)), np.zeros(4 * n_units),
                   np.zeros((n_units, n_inputs)), np.zeros(n_inputs))


def sines(rng, n, T, freq=0.3):
    t = np.arange(T)
    return np.sin(freq * t + rng.uniform(0, 2 * np.pi, (n, 1, 1)))


class TestForward:
    def test_zero_network(self):
        preds, h = lstm_forward(zero_net(2, 3), np.random.default_rng(0).normal(size=(2, 6)))
        assert preds.shape == (2, 5)
        assert np.all(preds == 0) and np.all(h == 0)

    def test_hand_computed_single_unit(self):
        # gate weights [i, f, o, g] for input row and recurrent row
        wx = [0.5, -0.3, 0.8, 0.2]
        wh = [0.1, 0.4, -0.2, 0.7]
        bias = [0.05, 1.0, -0.1, 0.0]
        net = LstmNet(np.array([wx, wh]), np.array(bias), np.array([[1.5]]), np.array([0.2]))
        x = [0.3, -1.2, 0.7]
        sig = lambda z: 1.0 / (1.0 + math.exp(-z))
        h = c = 0.0
        expected = []
        for xt in x[:-1]:
            z = [wx[k] * xt + wh[k] * h + bias[k] for k in range(4)]
            i, f, o, g = sig(z[0]), sig(z[1]), sig(z[2]), math.tanh(z[3])
            c = f * c + i * g
            h = o * math.tanh(c)
            expected.append(1.5 * h + 0.2)
        preds, h_final = lstm_forward(net, np.array([x]))
        assert np.allclose(preds[0], expected, rtol=1e-12)
        assert h_final[0] == pytest.approx(h, rel=1e-12)

    @pytest.mark.parametrize("t", [0, 2, 5])
    def test_causality(self, t):
        net = random_net()
        seq = np.random.default_rng(1).normal(size=(2, 7))
        base, _ = lstm_forward(net, seq)
        bumped = seq.copy()
        bumped[:, t] += 3.0
        out, _ = lstm_forward(net, bumped)
        # preds[:, p] is the prediction of step p + 1 made from steps 0..p
        assert np.array_equal(out[:, :t], base[:, :t])
        if t < 6:
            assert not np.array_equal(out[:, t], base[:, t])

    def test_deterministic(self):
        net = random_net()
        seq = np.random.default_rng(2).normal(size=(2, 5))
        assert np.array_equal(lstm_forward(net, seq)[0], lstm_forward(net, seq)[0])

    def test_activations_match_forward(self):
        net, seq = random_net(), np.random.default_rng(3).normal(size=(2, 6))
        assert np.array_equal(lstm_activations(net, seq), lstm_forward(net, seq)[1])
        assert np.array_equal(lstm_activations_batch(net, seq[None])[0], lstm_forward(net, seq)[1])

    def test_wrong_channels(self):
        with pytest.raises(DimensionError):
            lstm_forward(random_net(n_inputs=2), np.zeros((3, 5)))


class TestMse:
    def test_zero_net_unit_targets(self):
        seq = np.random.default_rng(0).choice([-1.0, 1.0], size=(2, 9))
        assert lstm_mse(zero_net(2, 3), seq) == pytest.approx(1.0)

    def test_perfect_prediction(self):
        net = zero_net(1, 2)
        assert lstm_mse(net, np.zeros((1, 6))) == 0.0

    def test_matches_forward_residuals(self):
        net, seq = random_net(), np.random.default_rng(4).normal(size=(2, 8))
        preds, _ = lstm_forward(net, seq)
        assert lstm_mse(net, seq) == pytest.approx(np.mean((preds - seq[:, 1:]) ** 2), rel=1e-12)

    def test_batch(self):
        net, seqs = random_net(), np.random.default_rng(5).normal(size=(3, 2, 6))
        assert np.allclose(lstm_mse_batch(net, seqs), [lstm_mse(net, s) for s in seqs])


class TestGradients:
    def test_finite_differences(self):
        net = random_net(2, 4, seed=11)
        seqs = np.random.default_rng(12).normal(size=(3, 2, 5))
        _, grads = loss_and_grads(net, seqs)
        h = 1e-5
        for name, p in net.params().items():
            num = np.empty_like(p)
            for idx in np.ndindex(p.shape):
                up, down = p.copy(), p.copy()
                up[idx] += h
                down[idx] -= h
                lp = loss_and_grads(net.with_params({**net.params(), name: up}), seqs)[0]
                lm = loss_and_grads(net.with_params({**net.params(), name: down}), seqs)[0]
                num[idx] = (lp - lm) / (2 * h)
            rel = np.linalg.norm(grads[name] - num) / max(np.linalg.norm(num), 1e-12)
            assert rel < 1e-4, name

    def test_masked_gradients(self):
        net = random_net(2, 3, seed=2)
        seqs = np.random.default_rng(3).normal(size=(2, 2, 5))
        masks = np.random.default_rng(4).choice([0.0, 2.0], size=(2, 4, 3))
        _, grads = loss_and_grads(net, seqs, masks)
        p = net.Wy.copy()
        p[1, 0] += 1e-6
        lp = loss_and_grads(net.with_params({**net.params(), "Wy": p}), seqs, masks)[0]
        l0 = loss_and_grads(net, seqs, masks)[0]
        assert (lp - l0) / 1e-6 == pytest.approx(grads["Wy"][1, 0], rel=1e-4)


class TestRmsProp:
    def test_zero_gradient(self):
        params = {"w": np.array([1.0, -2.0])}
        state = RmsPropState({"w": np.array([0.5, 0.2])})
        new, st = rmsprop_step(params, {"w": np.zeros(2)}, state)
        assert np.array_equal(new["w"], params["w"])
        assert np.allclose(st.avg_sq["w"], [0.45, 0.18])

    def test_first_step_closed_form(self):
        params = {"w": np.array([0.0])}
        new, _ = rmsprop_step(params, {"w": np.array([1.0])}, RmsPropState.zeros_like(params))
        assert new["w"][0] == pytest.approx(-0.001 / (math.sqrt(0.1) + 1e-8), rel=1e-12)

    def test_quadratic_descent(self):
        params = {"w": np.array([1.0])}
        state = RmsPropState.zeros_like(params, lr=0.02)
        trace = [1.0]
        for _ in range(100):
            params, state = rmsprop_step(params, {"w": 2 * params["w"]}, state)
            trace.append(abs(params["w"][0]))
        assert all(b < a for a, b in zip(trace, trace[1:]))
        assert trace[-1] < 0.1

    def test_non_finite_rejected(self):
        params = {"w": np.zeros(1)}
        with pytest.raises(TrainingError):
            rmsprop_step(params, {"w": np.array([np.nan])}, RmsPropState.zeros_like(params))

    def test_clipping(self):
        g = {"a": np.array([3.0]), "b": np.array([4.0])}
        out = clip_by_global_norm(g, 1.0)
        assert np.sqrt(out["a"] ** 2 + out["b"] ** 2)[0] == pytest.approx(1.0)
        assert clip_by_global_norm(g, 10.0) is g


class TestFit:
    def test_constant_sequences(self):
        net = lstm_fit(np.zeros((8, 1, 10)), TrainConfig(n_units=4, epochs=10, batch_size=4))
        assert lstm_mse_batch(net, np.zeros((8, 1, 10))).mean() <= 1e-3

    def test_sine_beats_zero_baseline(self):
        seqs = sines(np.random.default_rng(0), 16, 30)
        net = lstm_fit(seqs, TrainConfig(n_units=8, epochs=30, batch_size=4, lr=1e-2))
        baseline = np.mean(seqs[:, :, 1:] ** 2)
        assert lstm_mse_batch(net, seqs).mean() < baseline
        assert len(net.history) == 30

    def test_loss_non_increasing_at_small_lr(self):
        seqs = np.random.default_rng(1).normal(size=(6, 2, 8))
        net = lstm_fit(seqs, TrainConfig(n_units=4, epochs=8, batch_size=6, lr=1e-4))
        h = np.array(net.history)
        assert np.all(np.diff(h) <= 1e-12)

    def test_deterministic(self):
        seqs = np.random.default_rng(2).normal(size=(5, 1, 6))
        cfg = TrainConfig(n_units=3, epochs=3, batch_size=2, dropout=0.3, seed=9)
        assert np.array_equal(lstm_fit(seqs, cfg).W, lstm_fit(seqs, cfg).W)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(dropout=1.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)

    def test_json_round_trip(self):
        net = init_lstm(2, 3, seed=1)
        back = LstmNet.from_json(net.to_json())
        for name, p in net.params().items():
            assert np.array_equal(back.params()[name], p)


@pytest.fixture(scope="module")
def sine_noise_pair():
    rng = np.random.default_rng(0)
    pos = sines(rng, 20, 30)
    neg = rng.normal(size=(20, 1, 30))
    cfg = TrainConfig(n_units=8, epochs=25, batch_size=4, lr=1e-2)
    return lstm_classifier_fit(np.concatenate([pos, neg]), [True] * 20 + [False] * 20, cfg)


class TestPaired:
    def test_identical_nets(self):
        net = random_net(1, 3)
        paired = PairedGenerative(net, net, "lstm")
        probe = np.random.default_rng(0).normal(size=(1, 7))
        assert abs(lstm_ratio(paired, probe)) < 1e-12
        assert lstm_classify(paired, probe) == "POS"

    def test_log_identity(self):
        # bias-only nets: residual 1 under pos, sqrt(e) under neg, so MSE_NEG = e * MSE_POS
        seq = np.full((1, 9), 2.0)
        pos = zero_net(1, 2).with_params({**zero_net(1, 2).params(), "by": np.array([1.0])})
        neg = zero_net(1, 2).with_params({**zero_net(1, 2).params(), "by": np.array([2.0 - math.sqrt(math.e)])})
        assert lstm_ratio(PairedGenerative(pos, neg, "lstm"), seq) == pytest.approx(1.0, abs=1e-12)

    def test_sine_and_noise_probes(self, sine_noise_pair):
        rng = np.random.default_rng(5)
        assert lstm_ratio(sine_noise_pair, sines(rng, 1, 30)[0]) > 0
        assert lstm_classify(sine_noise_pair, sines(rng, 1, 30)[0]) == "POS"
        assert lstm_classify(sine_noise_pair, rng.normal(size=(1, 30))) == "NEG"

    def test_ratio_sign_matches_classify(self, sine_noise_pair):
        probes = np.random.default_rng(6).normal(size=(200, 1, 30))
        probes[:100] = sines(np.random.default_rng(7), 100, 30)
        r = lstm_ratio_batch(sine_noise_pair, probes)
        assert np.array_equal(r >= 0, lstm_classify_batch(sine_noise_pair, probes) == "POS")

    def test_activations_linearly_separable(self):
        rng = np.random.default_rng(8)
        net = random_net(1, 8, seed=3, scale=0.8)
        a = lstm_activations_batch(net, rng.normal(3, 0.5, (100, 1, 12)))
        b = lstm_activations_batch(net, rng.normal(-3, 0.5, (100, 1, 12)))
        X = np.vstack([a, b])
        X = np.hstack([X, np.ones((200, 1))])
        y = np.r_[np.ones(100), -np.ones(100)]
        train = np.r_[0:50, 100:150]
        test = np.r_[50:100, 150:200]
        w, *_ = np.linalg.lstsq(X[train], y[train], rcond=None)
        acc = np.mean(np.sign(X[test] @ w) == y[test])
        assert acc > 0.9

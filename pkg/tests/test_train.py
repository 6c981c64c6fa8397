import csv
import math

import numpy as np
import pytest
from pydantic import ValidationError

from minnsim.channel import add_noise
from minnsim.errors import ConfigError, DimensionError, DivergenceError, RangeError
from minnsim.harness import Dataset
from minnsim.minn import DecoderParams, EncoderParams, MinnModel
from minnsim.tensorcore import ComplexTensor, GradTape, finite_diff_check, ops, parameter
from minnsim.train import (
    SGD,
    Adam,
    Metrics,
    TrainConfig,
    Trainer,
    evaluate,
    fit,
    make_optimizer,
    power_penalty,
    task_loss,
    train_epoch,
    transfer_finetune,
)


class LinearProbe:
    """Channel-free model: logits = x W."""

    needs_channel = False
    p_max = 1.0

    def __init__(self, weight):
        self.weight = parameter(weight, name="probe.weight")

    def parameters(self):
        return [self.weight]

    def forward(self, x, realization=None, rng=None):
        return ops.complex_matmul(ops.as_tensor(x), self.weight), None


class RandomGuesser:
    needs_channel = False

    def __init__(self, n_classes, seed):
        self.n_classes = n_classes
        self.rng = np.random.default_rng(seed)

    def parameters(self):
        return []

    def forward(self, x, realization=None, rng=None):
        return ComplexTensor(self.rng.standard_normal((len(x), self.n_classes))), None


def _minn(seed, channel, p_max=1.0):
    from minnsim.wave import SimStack

    rng = np.random.default_rng(seed)
    stack = SimStack.build(2, 2, wavelength=0.01, rng=rng)
    encoder = EncoderParams.init((4,), 2, rng, hidden=(8,))
    decoder = DecoderParams.init(2, 2, rng, hidden=(8,))
    return MinnModel(encoder, decoder, channel, stack, p_max=p_max)


def test_cross_entropy_of_uniform_logits_is_log_classes():
    loss = task_loss(np.zeros((4, 10)), np.array([0, 3, 9, 5]))
    assert loss.item().real == pytest.approx(math.log(10), abs=1e-12)


def test_cross_entropy_matches_formula(rng):
    logits = rng.standard_normal((6, 4))
    y = np.array([0, 1, 2, 3, 1, 0])
    log_p = logits - np.log(np.sum(np.exp(logits), axis=1, keepdims=True))
    expected = -np.mean(log_p[np.arange(6), y])
    assert task_loss(logits, y).item().real == pytest.approx(expected, rel=1e-12)


def test_mse_loss():
    y = np.array([0, 2, 1])
    one_hot = np.eye(3)[y]
    assert task_loss(one_hot, y, "mse").item().real == 0.0
    assert task_loss(one_hot, one_hot, "mse").item().real == 0.0
    assert task_loss(np.zeros((3, 3)), y, "mse").item().real == pytest.approx(1.0 / 3.0)


def test_task_loss_rejects_bad_targets():
    with pytest.raises(RangeError):
        task_loss(np.zeros((2, 10)), np.array([1, 10]))
    with pytest.raises(RangeError):
        task_loss(np.zeros((1, 3)), np.array([-1]))
    with pytest.raises(DimensionError):
        task_loss(np.zeros((2, 3)), np.array([0.5, 1.0]))
    with pytest.raises(DimensionError):
        task_loss(np.zeros((2, 3)), np.array([0, 1, 2]))
    with pytest.raises(ConfigError):
        task_loss(np.zeros((2, 3)), np.array([0, 1]), "hinge")


def test_power_penalty_values_and_gradient(rng):
    s = np.array([[1.0 + 0j], [1j]])
    assert power_penalty(s, 0.0).item() == 0.0
    assert power_penalty(s, 0.5).item().real == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        power_penalty(s, -1.0)

    w = parameter(rng.standard_normal((3, 2, 1)), name="w")
    with GradTape() as tape:
        loss = power_penalty(w, 0.3)
        tape.backward(loss)
    assert np.allclose(w.grad, 0.3 * 2.0 * w.data / 3.0)
    assert finite_diff_check(lambda: power_penalty(w, 0.3), w) < 1e-6


def test_single_sgd_step_on_least_squares_matches_hand_computation(rng):
    x = rng.standard_normal((5, 2))
    target = rng.standard_normal((5, 1))
    w0 = rng.standard_normal((2, 1))
    model = LinearProbe(w0.copy())

    def squared_error(model, x, y, realization, rng, cfg):
        pred, _ = model.forward(x)
        return ops.mean(ops.abs2(ops.sub(pred, y))), None

    cfg = TrainConfig(learning_rate=0.1, momentum=0.0)
    trainer = Trainer(model, cfg, loss_fn=squared_error)
    trainer.step(x, target, None, rng, "step")

    grad = 2.0 / 5.0 * x.T @ (x @ w0 - target)
    assert np.allclose(model.weight.data, w0 - 0.1 * grad, rtol=0, atol=1e-12)


def test_momentum_accumulates_velocity():
    p = parameter(np.array([1.0]))
    opt = SGD([p], lr=0.5, momentum=0.5)
    for _ in range(2):
        p.grad = np.array([1.0])
        opt.step()
    # v1 = 1, v2 = 1.5
    assert p.data[0] == pytest.approx(1.0 - 0.5 - 0.75)


def test_make_optimizer_follows_config():
    p = parameter(np.zeros(2))
    assert isinstance(make_optimizer(TrainConfig(optimizer="adam"), [p]), Adam)
    opt = make_optimizer(TrainConfig(momentum=0.3), [p], lr=0.2)
    assert isinstance(opt, SGD) and opt.lr == 0.2 and opt.momentum == 0.3


def test_zero_learning_rate_leaves_parameters_untouched(blobs, small_channel):
    model = _minn(0, small_channel)
    before = [p.data.copy() for p in model.parameters()]
    cfg = TrainConfig(learning_rate=0.0, batch_size=16, epochs=1)
    metrics = train_epoch(model, blobs, cfg, np.random.default_rng(0))
    assert len(metrics.rows) == 1
    for old, p in zip(before, model.parameters()):
        assert np.array_equal(old, p.data)


def test_training_is_deterministic(blobs, small_channel):
    cfg = TrainConfig(epochs=2, batch_size=16, learning_rate=0.05, seed=3)
    first = fit(_minn(1, small_channel), blobs, cfg)
    second = fit(_minn(1, small_channel), blobs, cfg)
    assert first.loss == second.loss
    assert first.accuracy == second.accuracy


def test_single_stage_schedule_equals_fit(blobs, small_channel):
    cfg = TrainConfig(epochs=2, batch_size=16, learning_rate=0.05, seed=3)
    plain = fit(_minn(2, small_channel), blobs, cfg)
    staged = Metrics()
    transfer_finetune(_minn(2, small_channel), [(small_channel.snr_db, 2)], blobs, cfg, metrics=staged)
    assert plain.loss == staged.loss
    assert staged.column("stage") == [0, 0]


def test_empty_schedule_is_rejected(blobs, small_channel):
    with pytest.raises(ConfigError):
        transfer_finetune(_minn(0, small_channel), [], blobs, TrainConfig())


def test_schedule_stages_decay_the_learning_rate(blobs, small_channel):
    cfg = TrainConfig(batch_size=40, learning_rate=0.1, stage_decay=0.5)
    metrics = Metrics()
    model = _minn(4, small_channel)
    transfer_finetune(model, [(20.0, 1), (10.0, 1), (5.0, 1)], blobs, cfg, metrics=metrics)
    assert metrics.column("snr_db") == [20.0, 10.0, 5.0]
    assert metrics.column("stage") == [0, 1, 2]


def test_evaluate_perfect_and_random_models():
    labels = np.arange(200) % 10
    onehot = Dataset(np.eye(10)[labels], labels, 10, "onehot")
    accuracy, power = evaluate(LinearProbe(np.eye(10)), onehot, math.inf, 1, np.random.default_rng(0))
    assert accuracy == 1.0
    assert power == 0.0

    labels = np.arange(5000) % 10
    noise = Dataset(np.zeros((5000, 1)), labels, 10, "noise")
    accuracy, _ = evaluate(RandomGuesser(10, 0), noise, math.inf, 1, np.random.default_rng(0))
    assert abs(accuracy - 0.1) < 0.02


def test_evaluate_reports_hard_norm_power_and_restores_snr(blobs, small_channel):
    model = _minn(5, small_channel, p_max=2.0)
    from minnsim.train import make_sampler

    sampler = make_sampler(model)
    accuracy, power = evaluate(model, blobs, 0.0, 2, np.random.default_rng(1), sampler)
    assert 0.0 <= accuracy <= 1.0
    assert power == pytest.approx(2.0, rel=1e-9)
    assert sampler.snr_db == small_channel.snr_db
    with pytest.raises(ConfigError):
        evaluate(model, blobs, 0.0, 0, np.random.default_rng(1), sampler)


def test_divergence_names_epoch_and_step(blobs):
    def broken(model, x, y, realization, rng, cfg):
        return ComplexTensor(np.nan), None

    trainer = Trainer(LinearProbe(np.zeros((4, 2))), TrainConfig(batch_size=80), loss_fn=broken)
    with pytest.raises(DivergenceError, match="epoch 0 step 0"):
        trainer.run_epoch(blobs, np.random.default_rng(0))


def test_metrics_csv_appends_without_repeating_the_header(tmp_path):
    metrics = Metrics()
    metrics.add(0, 0.5, 0.75, 1.0, 10.0, 0)
    metrics.add(1, 0.25, 0.8, 1.0, 10.0, 0, stage=1)
    path = tmp_path / "metrics.csv"
    metrics.append_csv(path)
    metrics.append_csv(path)
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 4
    assert list(rows[0])[:6] == ["epoch", "loss", "accuracy", "tx_power", "snr_db", "seed"]
    assert rows[1]["stage"] == "1" and rows[0]["stage"] == ""
    with pytest.raises(ValueError):
        metrics.add(2, 0.1, 1.5, 1.0, 10.0, 0)


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(snr_schedule=[(10.0, 0)])
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=-0.1)
    with pytest.raises(ValidationError):
        TrainConfig(unknown=1)


@pytest.mark.slow
def test_minn_learns_separable_blobs(blobs, small_channel):
    cfg = TrainConfig(epochs=30, batch_size=16, learning_rate=0.05, seed=0, eval_realizations=3)
    metrics = fit(_minn(6, small_channel), blobs, cfg)
    assert metrics.accuracy[-1] > 0.9
    assert metrics.loss[-1] < metrics.loss[0]


@pytest.mark.slow
def test_power_penalty_lowers_transmit_power(blobs, small_channel):
    powers = {}
    for gamma in (0.0, 0.5):
        model = _minn(7, small_channel)
        model.power_mode = "soft_penalty"
        cfg = TrainConfig(epochs=20, batch_size=16, learning_rate=0.02, gamma=gamma, seed=0)
        metrics = fit(model, blobs, cfg)
        powers[gamma] = metrics.tx_power[-1]
        assert metrics.accuracy[-1] > 0.8
    assert powers[0.5] < powers[0.0]


def test_noisy_gradients_average_to_the_noise_free_gradient(rng):
    w = parameter(rng.standard_normal(5))
    c = (rng.standard_normal(5) + 1j * rng.standard_normal(5)) / math.sqrt(2)
    target = 3.0 * (1.0 + 1.0j) * np.ones(5)

    def gradient(draws, sigma2):
        w.grad = None
        with GradTape() as tape:
            y = ops.multiply(ComplexTensor(np.ones((draws, 1))), ops.multiply(w, c))
            y = add_noise(y, sigma2, rng)
            loss = ops.mean(ops.abs2(ops.sub(y, target)))
            tape.backward(loss)
        return w.grad.copy()

    clean = gradient(1, 0.0)
    assert np.allclose(clean, 2.0 * np.real(np.conj(c) * (w.data * c - target)) / 5.0)
    # one draw is biased by its noise sample; 10^4 draws average it out
    assert not np.allclose(gradient(1, 1.0), clean, rtol=0.05)
    averaged = gradient(10_000, 1.0)
    assert np.linalg.norm(averaged - clean) / np.linalg.norm(clean) < 0.05


@pytest.mark.slow
def test_transmit_power_falls_along_the_gamma_grid(blobs, small_channel):
    grid = (0.0, 0.01, 0.1, 1.0)
    powers = {gamma: [] for gamma in grid}
    for seed in (7, 8, 9):
        for gamma in grid:
            model = _minn(seed, small_channel)
            model.power_mode = "soft_penalty"
            cfg = TrainConfig(epochs=20, batch_size=16, learning_rate=0.02, gamma=gamma, seed=seed)
            powers[gamma].append(fit(model, blobs, cfg).tx_power[-1])
    means = [np.mean(powers[gamma]) for gamma in grid]
    assert all(b <= a for a, b in zip(means, means[1:]))
    assert means[-1] < means[0]


@pytest.mark.slow
def test_high_snr_pretraining_matches_training_at_low_snr(blobs, small_channel):
    staged, plain = [], []
    for seed in (0, 1, 2):
        cfg = TrainConfig(learning_rate=0.05, batch_size=16, seed=seed)
        for schedule, scores in (([(30.0, 10), (5.0, 10)], staged), ([(5.0, 20)], plain)):
            model = _minn(seed, small_channel)
            transfer_finetune(model, schedule, blobs, cfg)
            accuracy, _ = evaluate(model, blobs, 5.0, 20, np.random.default_rng(seed))
            scores.append(accuracy)
    # paired seeds; the slack covers Monte-Carlo evaluation noise
    assert np.mean(staged) >= np.mean(plain) - 0.02

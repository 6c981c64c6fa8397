import math

import numpy as np
import pytest
from pydantic import ValidationError

from minnsim.channel import (
    ChannelConfig,
    ChannelRealization,
    ChannelSampler,
    add_noise,
    awgn,
    end_to_end_response,
    geometric_channel,
    noise_power,
    rayleigh_channel,
)
from minnsim.errors import ConfigError, DataError, DimensionError
from minnsim.minn import ControllerParams
from minnsim.tensorcore import ComplexTensor, GradTape, ops, parameter


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def test_boresight_single_path_is_all_ones(rng):
    H = geometric_channel(3, 4, 1, rng, gains=[1.0], aoa=[0.0], aod=[0.0])
    assert np.allclose(H, np.ones((3, 4)), rtol=0, atol=1e-15)


def test_geometric_normalisation_monte_carlo(rng):
    ratios = [np.sum(np.abs(geometric_channel(4, 4, 10, rng)) ** 2) / 16 for _ in range(10_000)]
    assert abs(np.mean(ratios) - 1.0) < 0.05


def test_geometric_rank_bounded_by_paths(rng):
    assert np.linalg.matrix_rank(geometric_channel(6, 5, 2, rng)) <= 2


def test_geometric_needs_a_scatterer(rng):
    with pytest.raises(ConfigError):
        geometric_channel(2, 2, 0, rng)


def test_rayleigh_moments_and_determinism():
    H = rayleigh_channel(100, 100, np.random.default_rng(3))
    assert abs(np.mean(np.abs(H) ** 2) - 1.0) < 0.05
    assert abs(np.mean(H)) < 0.05
    assert np.array_equal(H, rayleigh_channel(100, 100, np.random.default_rng(3)))


def test_end_to_end_identity_and_blocked_sim(rng):
    h1, h2, hd = cn(rng, 4, 2), cn(rng, 3, 4), cn(rng, 3, 2)
    r = ChannelRealization(h1, h2)
    assert np.allclose(end_to_end_response(r, np.eye(4)).data, h2 @ h1, rtol=0, atol=1e-14)
    blocked = ChannelRealization(h1, np.zeros((3, 4)), hd)
    assert np.allclose(end_to_end_response(blocked, cn(rng, 4, 4)).data, hd, rtol=0, atol=0)


def test_end_to_end_matches_triple_product_loop(rng):
    h1, h2, hd, T = cn(rng, 3, 2), cn(rng, 2, 3), cn(rng, 2, 2), cn(rng, 3, 3)
    out = end_to_end_response(ChannelRealization(h1, h2, hd), T).data
    expected = hd.copy()
    for i in range(2):
        for j in range(2):
            for a in range(3):
                for b in range(3):
                    expected[i, j] += h2[i, a] * T[a, b] * h1[b, j]
    assert np.allclose(out, expected, rtol=0, atol=1e-12)


def test_end_to_end_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        end_to_end_response(ChannelRealization(cn(rng, 4, 2), cn(rng, 3, 4)), np.eye(3))
    with pytest.raises(DimensionError):
        end_to_end_response(ChannelRealization(cn(rng, 4, 2), cn(rng, 3, 4), cn(rng, 2, 2)), np.eye(4))


def test_awgn_sentinel_and_power(rng):
    y = cn(rng, 8)
    assert np.array_equal(ops.as_tensor(awgn(y, math.inf, 1.0, rng)).data, y)
    noisy = awgn(np.zeros(10_000, dtype=complex), 0.0, 1.0, rng).data
    assert abs(np.mean(np.abs(noisy) ** 2) - 1.0) < 0.05
    assert noise_power(20.0, 2.0) == pytest.approx(0.02)
    with pytest.raises(ConfigError):
        noise_power(10.0, 0.0)


def test_noise_is_a_constant_for_backward(rng):
    w = parameter(rng.standard_normal(5))
    c, d = cn(rng, 5), cn(rng, 5)
    grads = []
    for sigma2 in (0.0, 1.0):
        w.grad = None
        with GradTape() as tape:
            y = add_noise(ops.multiply(w, c), sigma2, rng)
            loss = ops.sum(ops.real(ops.multiply(y, d)))
            tape.backward(loss)
        grads.append(w.grad)
    assert np.allclose(grads[0], grads[1], rtol=0, atol=1e-15)
    assert np.allclose(grads[0], np.real(c * d))


def test_channel_config_validation():
    assert ChannelConfig(snr_db=math.inf).snr_db == math.inf
    for bad in (dict(snr_db=math.nan), dict(snr_db=-math.inf), dict(sim_placement=1.0), dict(n_tx=0),
                dict(unknown=1)):
        with pytest.raises(ValidationError):
            ChannelConfig(**bad)


def test_realization_invariants(rng):
    with pytest.raises(ConfigError):
        ChannelRealization(H_direct=cn(rng, 2, 2), noise_sigma2=-1.0)
    with pytest.raises(DataError):
        ChannelRealization(H_direct=np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(ConfigError):
        ChannelRealization(H_tx_sim=cn(rng, 4, 2))


def test_sampler_shapes_and_observation(tiny_stack):
    cfg = ChannelConfig(n_tx=2, n_rx=2, seed=5)
    r = ChannelSampler(cfg, tiny_stack).sample(3)
    assert r.H_tx_sim.shape == (3, 4, 2)
    assert r.H_sim_rx.shape == (3, 2, 4)
    assert r.H_direct is None
    assert r.observation().shape == (3, ControllerParams.observation_size(cfg, tiny_stack))

    direct_cfg = cfg.model_copy(update={"include_direct_path": True})
    r = ChannelSampler(direct_cfg, tiny_stack).sample(2)
    assert r.H_direct.shape == (2, 2, 2)
    assert r.observation().shape == (2, ControllerParams.observation_size(direct_cfg, tiny_stack))


def test_sampler_freshness_pinning_and_determinism(tiny_stack):
    cfg = ChannelConfig(model="rayleigh", n_tx=2, n_rx=2, seed=11)
    a, b = ChannelSampler(cfg, tiny_stack), ChannelSampler(cfg, tiny_stack)
    first, second = a.sample(2), b.sample(2)
    assert np.array_equal(first.H_tx_sim, second.H_tx_sim)
    assert not np.allclose(first.H_tx_sim[0], first.H_tx_sim[1])
    pinned = a.pin()
    assert pinned.H_tx_sim is a.pin().H_tx_sim
    workers = a.split(2)
    assert not np.allclose(workers[0].sample().H_tx_sim, workers[1].sample().H_tx_sim)
    again = ChannelSampler(cfg, tiny_stack).split(2)[1].sample().H_tx_sim
    assert np.array_equal(again, ChannelSampler(cfg, tiny_stack).split(2)[1].sample().H_tx_sim)


def test_sampler_mode_validation(tiny_stack):
    with pytest.raises(ConfigError):
        ChannelSampler(ChannelConfig(), tiny_stack, mode="mirror")
    with pytest.raises(ConfigError):
        ChannelSampler(ChannelConfig())
    with pytest.raises(ConfigError):
        ChannelSampler(ChannelConfig(n_tx=2, n_rx=3), mode="digital")


def test_digital_and_no_sim_links():
    digital = ChannelSampler(ChannelConfig(n_tx=3, n_rx=3), mode="digital").sample(2)
    assert not digital.has_sim_path
    assert np.array_equal(digital.H_direct, np.broadcast_to(np.eye(3), (2, 3, 3)))
    no_sim = ChannelSampler(ChannelConfig(model="rayleigh", n_tx=2, n_rx=3), mode="no_sim").sample(4)
    assert no_sim.H_direct.shape == (4, 3, 2)


def test_strong_line_of_sight_dominates_tx_segment(tiny_stack):
    cfg = ChannelConfig(n_tx=2, n_rx=2, los_k_factor_db=60.0, seed=2)
    r = ChannelSampler(cfg, tiny_stack).sample(2)
    assert np.allclose(r.H_tx_sim[0], r.H_tx_sim[1], rtol=0, atol=0.02)
    assert np.mean(np.abs(r.H_tx_sim) ** 2) == pytest.approx(1.0, rel=0.01)


def test_rx_distance_jitter_scales_rx_segment(tiny_stack):
    base = ChannelConfig(model="rayleigh", n_tx=2, n_rx=2, seed=9)
    plain = ChannelSampler(base, tiny_stack).sample(1)
    jittered = ChannelSampler(base.model_copy(update={"rx_distance_jitter": 0.5}), tiny_stack).sample(1)
    assert np.array_equal(plain.H_tx_sim, jittered.H_tx_sim)
    ratio = plain.H_sim_rx / jittered.H_sim_rx
    assert np.allclose(ratio, ratio.flat[0])
    assert 0.5 <= ratio.flat[0].real <= 1.5


def test_calibrated_snr_is_realised():
    cfg = ChannelConfig(model="rayleigh", n_tx=4, n_rx=4, snr_db=10.0, seed=21)
    sampler = ChannelSampler(cfg, mode="no_sim")
    ref = sampler.calibrate(lambda r: end_to_end_response(r), p_ref=1.0)
    assert ref == sampler.ref_power > 0

    rng = np.random.default_rng(0)
    r = sampler.sample(10_000)
    s = cn(rng, 10_000, 4, 1)
    s /= np.linalg.norm(s, axis=(1, 2), keepdims=True)
    received = r.H_direct @ s
    signal = np.mean(np.sum(np.abs(received) ** 2, axis=(1, 2)) / 4)
    noise = add_noise(np.zeros_like(received), r.noise_sigma2, rng).data
    realised = 10 * np.log10(signal / np.mean(np.abs(noise) ** 2))
    assert abs(realised - cfg.snr_db) < 0.5


def test_calibration_accepts_tensors_and_static_pin(tiny_stack):
    cfg = ChannelConfig(model="rayleigh", n_tx=2, n_rx=2, seed=4)
    sampler = ChannelSampler(cfg, tiny_stack)
    ref = sampler.calibrate(lambda r: ComplexTensor(end_to_end_response(r, np.eye(4)).data), 1.0, static=True)
    assert ref > 0
    assert sampler.pin().noise_sigma2 == pytest.approx(ref * 0.1)

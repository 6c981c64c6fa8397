import logging
import math

import numpy as np

from ..errors import ConfigError
from ..tensorcore import no_grad
from ..wave.propagation import coupling_matrix
from .fading import complex_gaussian, geometric_channel, noise_power, rayleigh_channel
from .models import ChannelRealization

logger = logging.getLogger(__name__)

LINK_MODES = ("sim", "no_sim", "digital")


def _stacked(parts):
    return None if parts[0] is None else np.stack(parts)


class ChannelSampler:
    """Seeded source of channel realizations for one link.

    The master seed is split into independent streams for fading, noise and
    calibration, so drawing noise never shifts the fading sequence.
    """

    def __init__(self, cfg, stack=None, mode="sim", seed_sequence=None):
        if mode not in LINK_MODES:
            raise ConfigError(f"unknown link mode {mode!r}; expected one of {LINK_MODES}")
        if mode == "sim" and stack is None:
            raise ConfigError("a SIM link needs a SimStack")
        if mode == "digital" and cfg.n_tx != cfg.n_rx:
            raise ConfigError(f"digital link needs n_tx == n_rx, got {cfg.n_tx} and {cfg.n_rx}")
        self.cfg = cfg
        self.stack = stack
        self.mode = mode
        self.snr_db = cfg.snr_db
        self.ref_power = 1.0
        self._seq = seed_sequence if seed_sequence is not None else np.random.SeedSequence(cfg.seed or 0)
        fading_seq, noise_seq, calib_seq = self._seq.spawn(3)
        self.fading_rng = np.random.default_rng(fading_seq)
        self.noise_rng = np.random.default_rng(noise_seq)
        self.calibration_rng = np.random.default_rng(calib_seq)
        self._los = self._line_of_sight() if mode == "sim" and cfg.model == "geometric" else None
        self._pinned = None

    def split(self, n_workers):
        """Independent samplers for parallel workers, derived deterministically from the master seed."""
        return [ChannelSampler(self.cfg, self.stack, self.mode, seq) for seq in self._seq.spawn(n_workers)]

    @property
    def noise_sigma2(self):
        return noise_power(self.snr_db, self.ref_power)

    def _line_of_sight(self):
        """TX ULA -> first SIM layer coupling, scaled to unit mean power per entry."""
        cfg, first = self.cfg, self.stack.first
        wavelength = self.stack.wavelength
        x = (np.arange(cfg.n_tx) - (cfg.n_tx - 1) / 2.0) * wavelength / 2.0
        tx_pos = np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=1)
        sim_pos = first.positions() - np.asarray(first.origin) + np.array([0.0, 0.0, cfg.sim_placement * cfg.link_distance])
        los = coupling_matrix(tx_pos, (wavelength / 2.0) ** 2, sim_pos, (0.0, 0.0, 1.0), wavelength)
        return los * math.sqrt(los.size) / np.linalg.norm(los)

    def _segment(self, n_out, n_in, rng):
        if self.cfg.model == "rayleigh":
            return rayleigh_channel(n_out, n_in, rng)
        return geometric_channel(n_out, n_in, self.cfg.n_scatterers, rng)

    def _one(self, rng):
        cfg = self.cfg
        if self.mode == "digital":
            return None, None, np.eye(cfg.n_rx, dtype=np.complex128)
        direct = None
        if self.mode == "no_sim" or cfg.include_direct_path:
            direct = self._segment(cfg.n_rx, cfg.n_tx, rng)
        if self.mode == "no_sim":
            return None, None, direct

        n_first, n_last = self.stack.first.count, self.stack.last.count
        h1 = self._segment(n_first, cfg.n_tx, rng)
        if self._los is not None:
            k = 10.0 ** (cfg.los_k_factor_db / 10.0)
            h1 = math.sqrt(k / (k + 1.0)) * self._los + math.sqrt(1.0 / (k + 1.0)) * h1
        h2 = self._segment(cfg.n_rx, n_last, rng)
        if cfg.rx_distance_jitter > 0:
            ratio = rng.uniform(1.0 - cfg.rx_distance_jitter, 1.0 + cfg.rx_distance_jitter)
            h2 = h2 / ratio
        return h1, h2, direct

    def sample(self, batch=1, rng=None):
        rng = self.fading_rng if rng is None else rng
        draws = [self._one(rng) for _ in range(batch)]
        h1, h2, direct = zip(*draws)
        return ChannelRealization(_stacked(h1), _stacked(h2), _stacked(direct), self.noise_sigma2)

    def pin(self):
        """Draw (once) and return the single realization used under static fading."""
        if self._pinned is None:
            self._pinned = self.sample(1)
        return self._pinned.with_noise(self.noise_sigma2)

    def calibrate(self, effective_channel, p_ref, static=False, n_samples=None):
        """Set ref_power to the mean per-antenna received power of reference signals.

        `effective_channel(realization)` returns H_eff as an array (B, n_rx, n_tx);
        reference signals are complex Gaussian, normalised to energy p_ref.
        """
        from config import CALIBRATION_SAMPLES

        n_samples = n_samples or CALIBRATION_SAMPLES
        if static:
            realization = self.pin()
        else:
            realization = self.sample(n_samples, rng=self.calibration_rng)
        with no_grad():
            h_eff = effective_channel(realization)
        h_eff = np.asarray(getattr(h_eff, "data", h_eff))
        if h_eff.ndim == 2:
            h_eff = h_eff[None]
        s = complex_gaussian(self.calibration_rng, (n_samples, self.cfg.n_tx, 1))
        s *= np.sqrt(p_ref / np.sum(np.abs(s) ** 2, axis=(1, 2), keepdims=True))
        received = h_eff @ s
        power = float(np.mean(np.sum(np.abs(received) ** 2, axis=(1, 2)) / self.cfg.n_rx))
        self.ref_power = power if power > 0 else 1.0
        logger.debug("calibrated ref_power=%.4e (snr %.1f dB)", self.ref_power, self.snr_db)
        return self.ref_power

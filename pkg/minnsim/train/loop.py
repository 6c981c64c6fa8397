import logging
import math

import numpy as np
from tqdm import tqdm

from ..channel import ChannelSampler
from ..errors import ConfigError, DivergenceError
from ..minn import transmit_power
from ..tensorcore import GradTape, no_grad, ops
from .losses import power_penalty, task_loss
from .models import Metrics
from .optim import make_optimizer

logger = logging.getLogger(__name__)


def default_loss(model, x, y, realization, rng, cfg):
    """Task loss plus the TX power penalty; returns (loss, tx signal)."""
    logits, s = model.forward(x, realization, rng)
    loss = task_loss(logits, y, cfg.loss)
    if s is not None and cfg.gamma > 0:
        loss = ops.add(loss, power_penalty(s, cfg.gamma))
    return loss, s


def make_sampler(model):
    if not getattr(model, "needs_channel", False):
        return None
    return ChannelSampler(model.channel_cfg, model.stack, model.link)


def _batches(n, batch_size, order):
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _realization(sampler, size, static):
    if sampler is None:
        return None
    return sampler.pin() if static else sampler.sample(size)


def evaluate(model, dataset, snr_db, n_realizations, rng, sampler=None, static=False, batch_size=256):
    """Accuracy over dataset x channel realizations with live noise, and mean TX power per sample."""
    if n_realizations < 1:
        raise ConfigError(f"n_realizations must be at least 1, got {n_realizations}")
    if len(dataset.y) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    sampler = sampler if sampler is not None else make_sampler(model)
    saved_snr = None
    if sampler is not None:
        saved_snr, sampler.snr_db = sampler.snr_db, snr_db
        sampler.calibrate(model.effective_channel, model.p_max, static)

    correct, power, seen = 0, 0.0, 0
    order = np.arange(len(dataset.y))
    with no_grad():
        for _ in range(n_realizations):
            for idx in _batches(len(order), batch_size, order):
                realization = _realization(sampler, len(idx), static)
                logits, s = model.forward(dataset.x[idx], realization, rng)
                correct += int(np.sum(np.argmax(logits.data, axis=-1) == dataset.y[idx]))
                if s is not None:
                    power += float(np.sum(transmit_power(s)))
                seen += len(idx)

    if sampler is not None:
        sampler.snr_db = saved_snr
    return correct / seen, power / seen


class Trainer:
    """Mini-batch training state for one model: sampler, optimizer and metrics history."""

    def __init__(self, model, cfg, sampler=None, loss_fn=None, optimizer=None):
        self.model = model
        self.cfg = cfg
        self.sampler = sampler if sampler is not None else make_sampler(model)
        self.loss_fn = loss_fn or default_loss
        self.optimizer = optimizer or make_optimizer(cfg, model.parameters())
        self.metrics = Metrics()
        self.epoch = 0
        self.seed = cfg.seed or 0

    @property
    def snr_db(self):
        return self.sampler.snr_db if self.sampler is not None else math.inf

    def step(self, x, y, realization, rng, label):
        self.optimizer.zero_grad()
        with GradTape() as tape:
            loss, _ = self.loss_fn(self.model, x, y, realization, rng, self.cfg)
            value = float(loss.item())
            if not math.isfinite(value):
                raise DivergenceError(f"loss became {value} at {label}")
            if len(tape):
                tape.backward(loss)
        self.optimizer.step()
        return value

    def run_epoch(self, dataset, rng, test=None, **tags):
        """One shuffled pass over `dataset`; appends and returns the epoch's Metrics row."""
        n = len(dataset.y)
        if n == 0:
            raise ConfigError("cannot train on an empty dataset")
        cfg, sampler = self.cfg, self.sampler
        if sampler is not None:
            sampler.calibrate(self.model.effective_channel, self.model.p_max, cfg.static_fading)
        noise_rng = sampler.noise_rng if sampler is not None else rng

        order = rng.permutation(n)
        total = 0.0
        batches = tqdm(
            list(_batches(n, cfg.batch_size, order)),
            desc=f"epoch {self.epoch}",
            disable=not cfg.progress,
            leave=False,
        )
        for step, idx in enumerate(batches):
            realization = _realization(sampler, len(idx), cfg.static_fading)
            label = f"epoch {self.epoch} step {step}"
            value = self.step(dataset.x[idx], dataset.y[idx], realization, noise_rng, label)
            logger.debug("%s loss=%.6f", label, value)
            total += value * len(idx)

        eval_rng = np.random.default_rng([self.seed, self.epoch])
        accuracy, tx_power = evaluate(
            self.model,
            test if test is not None else dataset,
            self.snr_db,
            cfg.eval_realizations,
            eval_rng,
            sampler,
            cfg.static_fading,
        )
        row = self.metrics.add(self.epoch, total / n, accuracy, tx_power, self.snr_db, self.seed, **tags)
        logger.info(
            "epoch %d: loss=%.4f accuracy=%.4f tx_power=%.4f snr=%.1f dB",
            self.epoch, row["loss"], accuracy, tx_power, self.snr_db,
        )
        self.epoch += 1
        return row


def train_epoch(model, dataset, cfg, rng, sampler=None, loss_fn=None, optimizer=None, test=None):
    trainer = Trainer(model, cfg, sampler, loss_fn, optimizer)
    trainer.run_epoch(dataset, rng, test)
    return trainer.metrics


def transfer_finetune(model, snr_schedule, dataset, cfg, test=None, sampler=None, metrics=None, loss_fn=None):
    """Train stage by stage through (snr_db, epochs) pairs, carrying parameters forward.

    The learning rate decays by cfg.stage_decay at every stage boundary.
    """
    if not snr_schedule:
        raise ConfigError("snr_schedule must contain at least one (snr_db, epochs) stage")
    trainer = Trainer(model, cfg, sampler, loss_fn)
    rng = np.random.default_rng(trainer.seed)
    for stage, (snr_db, epochs) in enumerate(snr_schedule):
        trainer.optimizer.lr = cfg.learning_rate * cfg.stage_decay ** stage
        if trainer.sampler is not None:
            trainer.sampler.snr_db = snr_db
        logger.info("stage %d: %d epochs at %.1f dB, lr=%.3g", stage, epochs, snr_db, trainer.optimizer.lr)
        for _ in range(epochs):
            trainer.run_epoch(dataset, rng, test, stage=stage)
    if metrics is not None:
        metrics.extend(trainer.metrics)
    return model


def fit(model, dataset, cfg, test=None, sampler=None, loss_fn=None):
    """Full training run: cfg.snr_schedule when given, else cfg.epochs at the channel's SNR."""
    schedule = cfg.snr_schedule
    if not schedule:
        snr_db = model.channel_cfg.snr_db if getattr(model, "needs_channel", False) else math.inf
        schedule = [(snr_db, cfg.epochs)]
    metrics = Metrics()
    transfer_finetune(model, schedule, dataset, cfg, test, sampler, metrics, loss_fn)
    return metrics

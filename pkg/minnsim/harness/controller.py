import json
import math
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from ..checkpoint import load_checkpoint, load_state
from ..errors import ConfigError, MinnError
from ..train import evaluate
from .experiments import CHECKPOINT_FILE, link_channel, load_config, prepare, read_metrics, run_experiment, sweep
from .forms import ExperimentConfig

TRAIN_KINDS = ("minn_classify", "no_sim_baseline", "digital_dnn_baseline", "power_control", "all_ms_classify")


def _resolve(config_path, seed, out, kind=None):
    cfg = load_config(config_path)
    if kind is not None and cfg.kind != kind:
        cfg = ExperimentConfig.model_validate({**cfg.model_dump(), "kind": kind})
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if out is not None:
        cfg = cfg.model_copy(update={"output": out})
    return cfg


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _summary(path):
    rows = read_metrics(path)
    if rows:
        last = rows[-1]
        click.echo(f"last row: epoch={last['epoch']} loss={last['loss']} accuracy={last['accuracy']} "
                   f"tx_power={last['tx_power']}")
    click.echo(f"metrics written to {path}")


def common_options(fn):
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed (overrides the config).")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True,
                      help="Experiment config (.toml or .json, or a run manifest).")(fn)
    return fn


@click.command()
@common_options
def train(config_path, seed, out):
    """Train a MINN-family model (or a baseline) end to end."""
    try:
        cfg = _resolve(config_path, seed, out)
        if cfg.kind not in TRAIN_KINDS:
            raise ConfigError(f"train runs {', '.join(TRAIN_KINDS)}; config kind is {cfg.kind!r}")
        _summary(run_experiment(cfg))
    except (MinnError, ValidationError) as exc:
        _fail(exc)


@click.command(name="eval")
@common_options
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Checkpoint to evaluate (defaults to <out>/model.ckpt).")
@click.option("--snr", "snr_db", type=float, default=None, help="Evaluation SNR in dB (defaults to the channel's).")
@click.option("--realizations", type=int, default=1, show_default=True)
def evaluate_checkpoint(config_path, seed, out, checkpoint, snr_db, realizations):
    """Evaluate a trained checkpoint on the test split."""
    try:
        cfg = _resolve(config_path, seed, out)
        if cfg.kind not in TRAIN_KINDS:
            raise ConfigError(f"eval needs one of {', '.join(TRAIN_KINDS)}; config kind is {cfg.kind!r}")
        model, _, test = prepare(cfg)
        arrays, _ = load_checkpoint(checkpoint or Path(cfg.output) / CHECKPOINT_FILE)
        load_state(model, arrays)
        if snr_db is None:
            snr_db = link_channel(cfg).snr_db if cfg.kind != "all_ms_classify" else math.inf
        accuracy, power = evaluate(model, test, snr_db, realizations, np.random.default_rng(cfg.seed),
                                   static=cfg.train.static_fading)
        click.echo(f"accuracy={accuracy:.4f} tx_power={power:.4f} snr_db={snr_db}")
    except (MinnError, ValidationError, OSError) as exc:
        _fail(exc)


@click.command()
@common_options
def elm(config_path, seed, out):
    """MINN-ELM benchmark against the digital ELM."""
    try:
        _summary(run_experiment(_resolve(config_path, seed, out, kind="elm_benchmark")))
    except (MinnError, ValidationError) as exc:
        _fail(exc)


@click.command()
@common_options
def align(config_path, seed, out):
    """Pretrain two pairs, fit the linear map and approximate it with SIM stacks."""
    try:
        _summary(run_experiment(_resolve(config_path, seed, out, kind="alignment")))
    except (MinnError, ValidationError) as exc:
        _fail(exc)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_grid(grid_path, params):
    grid = {}
    if grid_path:
        path = Path(grid_path)
        try:
            with open(path, "rb") as handle:
                grid.update(tomllib.load(handle) if path.suffix == ".toml" else json.load(handle))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"sweep grid {path}: {exc}") from exc
    for item in params:
        key, sep, values = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=v1,v2,..., got {item!r}")
        grid[key.strip()] = [_parse_value(v.strip()) for v in values.split(",")]
    return grid


@click.command(name="sweep")
@common_options
@click.option("--grid", "grid_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TOML/JSON table of dotted config keys to value lists.")
@click.option("--param", "params", multiple=True, help="Grid axis as key=v1,v2 (repeatable).")
def sweep_command(config_path, seed, out, grid_path, params):
    """Run the Cartesian product of a parameter grid; writes one combined CSV."""
    try:
        cfg = _resolve(config_path, seed, out)
        click.echo(f"combined metrics written to {sweep(cfg, _parse_grid(grid_path, params))}")
    except (MinnError, ValidationError) as exc:
        _fail(exc)


COMMANDS = (train, evaluate_checkpoint, elm, align, sweep_command)

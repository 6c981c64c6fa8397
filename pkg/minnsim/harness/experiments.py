import copy
import csv
import hashlib
import itertools
import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from ..align import AlignmentTask, aligned_accuracy, digital_aligned_accuracy, sim_approximate
from ..channel import ChannelConfig, ChannelSampler, complex_gaussian
from ..checkpoint import save_checkpoint, state_dict
from ..elm import ElmModel, elm_accuracy, fit_elm, readout_mse, refit_on_drift
from ..errors import ConfigError, ExperimentError
from ..minn import AllMsModel, ControllerParams, DecoderParams, EncoderParams, MinnModel
from ..train import Metrics, evaluate, fit
from ..wave import SimStack, carrier_wavelength
from .datasets import load_csv_dataset, load_mnist_idx, minmax_scale, standardize, synthetic_dataset
from .forms import ExperimentConfig, SimStackSpec

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "manifest.json"
CHECKPOINT_FILE = "model.ckpt"
SWEEP_FILE = "sweep.csv"

LINKS = {
    "minn_classify": "sim",
    "power_control": "sim",
    "no_sim_baseline": "no_sim",
    "digital_dnn_baseline": "digital",
}


@contextmanager
def stage(name):
    """Re-raise any failure inside the block as an ExperimentError naming the stage."""
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(name, exc) from exc


def load_config(path):
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    elif path.suffix == ".json":
        with open(path) as handle:
            data = json.load(handle)
    else:
        raise ConfigError(f"{path}: config files must be .toml or .json")
    if "config" in data and "hash" in data:
        data = data["config"]
    return ExperimentConfig.model_validate(data)


def config_hash(cfg):
    canonical = json.dumps(json.loads(cfg.model_dump_json()), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_manifest(cfg, out_dir):
    manifest = {"config": json.loads(cfg.model_dump_json()), "hash": config_hash(cfg)}
    path = Path(out_dir) / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_datasets(spec, rng):
    if spec.source == "mnist":
        from config import MNIST_TEST_IMAGES, MNIST_TEST_LABELS, MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS

        train_limit = None if spec.full else spec.train_size
        test_limit = None if spec.full else spec.test_size
        train = load_mnist_idx(spec.train_images or MNIST_TRAIN_IMAGES, spec.train_labels or MNIST_TRAIN_LABELS,
                               spec.subsample, train_limit, spec.digits, "train")
        test = load_mnist_idx(spec.test_images or MNIST_TEST_IMAGES, spec.test_labels or MNIST_TEST_LABELS,
                              spec.subsample, test_limit, spec.digits, "test")
        return train, test
    if spec.source == "csv":
        full = load_csv_dataset(spec.path, spec.label_column, standardized=False)
    else:
        full = synthetic_dataset(spec.name, rng, spec.n_samples)
    train, test = full.train_test(spec.test_fraction, rng)
    return standardize(train, test)


def build_stack(spec, rng=None):
    from config import CARRIER_HZ

    wavelength = carrier_wavelength(CARRIER_HZ)
    stack = SimStack.build(
        spec.layers,
        spec.side,
        wavelength=wavelength,
        pitch=spec.pitch_wavelengths * wavelength,
        layer_spacing=spec.spacing_wavelengths * wavelength,
        rng=rng if spec.random_init else None,
    )
    logger.debug("SIM stack: %s", stack.describe())
    return stack


def build_minn(cfg, channel, input_shape, n_classes, link, rng):
    ms = cfg.model
    encoder = EncoderParams.init(input_shape, channel.n_tx, rng, ms.time_slots, tuple(ms.conv_channels), ms.kernel,
                                 tuple(ms.encoder_hidden), ms.activation, ms.pool)
    decoder = DecoderParams.init(channel.n_rx, n_classes, rng, ms.time_slots, tuple(ms.decoder_hidden), ms.activation)
    stack = controller = None
    if link == "sim":
        stack = build_stack(cfg.sim, rng)
        if ms.controller:
            obs_dim = ControllerParams.observation_size(channel, stack)
            controller = ControllerParams.init(obs_dim, stack.layer_sizes, rng, tuple(ms.controller_hidden), ms.activation)
    return MinnModel(encoder, decoder, channel, stack, ms.power_mode, ms.p_max, controller, link,
                     meta={"kind": cfg.kind, "seed": cfg.seed})


def link_channel(cfg):
    if cfg.kind == "digital_dnn_baseline":
        return cfg.channel.model_copy(update={"snr_db": math.inf})
    return cfg.channel


def prepare(cfg):
    cfg = cfg.resolve_seeds()
    rng = np.random.default_rng(cfg.seed)
    with stage("data"):
        train, test = load_datasets(cfg.dataset, rng)
    with stage("build"):
        if cfg.kind == "all_ms_classify":
            model = AllMsModel.build(train.input_shape, train.n_classes, cfg.model.hidden_layers, rng,
                                     encoding=cfg.model.encoding)
        else:
            model = build_minn(cfg, link_channel(cfg), train.input_shape, train.n_classes, LINKS[cfg.kind], rng)
    return model, train, test


def run_minn(cfg, out_dir):
    model, train, test = prepare(cfg)
    with stage("train"):
        metrics = fit(model, train, cfg.train, test)
    with stage("checkpoint"):
        save_checkpoint(Path(out_dir) / CHECKPOINT_FILE, state_dict(model), {"kind": cfg.kind, "hash": config_hash(cfg)})
    return metrics


def _drifted(H, amount, rng):
    rms = math.sqrt(float(np.mean(np.abs(H) ** 2)))
    noise = complex_gaussian(rng, H.shape) if np.iscomplexobj(H) else rng.standard_normal(H.shape)
    return H + amount * rms * noise


def run_elm(cfg, out_dir):
    spec = cfg.elm
    with stage("data"):
        train, test = load_datasets(cfg.dataset, np.random.default_rng(cfg.seed))
        # TX amplitudes are non-negative; magnitude activations cannot separate x from -x
        train, test = minmax_scale(train.flat(), test.flat())
    n_features = train.n_features
    tx_power = float(np.mean(np.sum(test.x ** 2, axis=1)))
    metrics = Metrics()
    with stage("fit"):
        for n_hidden in spec.n_hidden:
            channel = ChannelConfig(model=spec.channel_model, n_tx=n_features, n_rx=n_hidden,
                                    n_scatterers=cfg.channel.n_scatterers, snr_db=spec.snr_db,
                                    seed=cfg.channel.seed)
            # one independent fading stream per trial
            samplers = ChannelSampler(channel, mode="no_sim").split(spec.trials)
            for trial, sampler in enumerate(samplers):
                digital_seq, noise_seq = np.random.SeedSequence([cfg.seed, n_hidden, trial]).spawn(2)
                noise_rng = np.random.default_rng(noise_seq)
                kwargs = dict(activation=spec.activation, ridge_lambda=spec.ridge_lambda,
                              ridge_scale=spec.ridge_scale, n_classes=train.n_classes)
                tags = dict(n_hidden=n_hidden)
                elm = ElmModel.from_channel(sampler, **kwargs)
                fit_elm(elm, train.x, train.y, spec.snr_db, noise_rng)
                metrics.add(trial, readout_mse(train.x, train.y, elm), elm_accuracy(test.x, test.y, elm, spec.snr_db, noise_rng),
                            tx_power, spec.snr_db, cfg.seed, variant="minn_elm", **tags)
                if spec.drift > 0:
                    refit_on_drift(elm, _drifted(elm.H, spec.drift, noise_rng), train.x, train.y, spec.snr_db, noise_rng)
                    metrics.add(trial, readout_mse(train.x, train.y, elm),
                                elm_accuracy(test.x, test.y, elm, spec.snr_db, noise_rng),
                                tx_power, spec.snr_db, cfg.seed, variant="minn_elm_refit", **tags)
                if spec.digital:
                    digital = ElmModel.digital(n_hidden, n_features, np.random.default_rng(digital_seq), **kwargs)
                    fit_elm(digital, train.x, train.y)
                    metrics.add(trial, readout_mse(train.x, train.y, digital), elm_accuracy(test.x, test.y, digital),
                                tx_power, math.inf, cfg.seed, variant="digital_elm", **tags)
            logger.info("ELM n_hidden=%d: %d trials done", n_hidden, spec.trials)
    return metrics


def run_alignment(cfg, out_dir):
    spec = cfg.align
    d = spec.encoding_dim
    with stage("data"):
        train, test = load_datasets(cfg.dataset, np.random.default_rng(cfg.seed))
    pair_channel = cfg.channel.model_copy(update={"n_tx": d, "n_rx": d, "snr_db": math.inf})
    pair_train = cfg.train.model_copy(update={"epochs": spec.pretrain_epochs, "snr_schedule": []})
    metrics = Metrics()

    pairs = []
    with stage("pretrain"):
        for i, tag in enumerate(("a", "b")):
            rng = np.random.default_rng([cfg.seed, i])
            model = build_minn(cfg, pair_channel, train.input_shape, train.n_classes, "digital", rng)
            run = fit(model, train, pair_train.model_copy(update={"seed": cfg.seed + i}), test)
            metrics.extend(run, variant=f"pretrain_{tag}")
            pairs.append(model)
    model_a, model_b = pairs
    p_max = cfg.model.p_max
    eval_rng = np.random.default_rng([cfg.seed, 2])
    channel = cfg.channel.model_copy(update={"n_tx": d, "n_rx": d})

    with stage("map"):
        task = AlignmentTask.from_pairs(model_a.encoder, model_b.encoder, model_b.decoder,
                                        train.x[:spec.calibration_samples], p_max, spec.ridge)
        native, _ = evaluate(model_a, test, math.inf, 1, eval_rng)
        metrics.add(0, 0.0, native, p_max, math.inf, cfg.seed, variant="native_a")
        for variant, target in (("digital_map", task.target_map), ("unaligned", np.eye(d))):
            accuracy = digital_aligned_accuracy(task.encoder_a, target, task.decoder_b, test, channel, eval_rng, p_max)
            metrics.add(0, 0.0, accuracy, p_max, channel.snr_db, cfg.seed, variant=variant)

    with stage("approximate"):
        for i, (layers, side) in enumerate(itertools.product(spec.layers, spec.sides)):
            stack = build_stack(SimStackSpec(**{**cfg.sim.model_dump(), "layers": layers, "side": side}),
                                np.random.default_rng([cfg.seed, 3, i]))
            result = sim_approximate(task.target_map, stack, spec.iters, spec.lr)
            accuracy = aligned_accuracy(task.encoder_a, result.phases, task.decoder_b, test, channel, stack,
                                        result.beta, eval_rng, p_max)
            metrics.add(i, result.error, accuracy, p_max, channel.snr_db, cfg.seed, variant="sim",
                        layers=layers, side=side, beta_abs=result.passivity)
            arrays = {"target_map": task.target_map, "beta": np.array([result.beta])}
            arrays.update({f"theta{k}": theta for k, theta in enumerate(result.phases)})
            save_checkpoint(Path(out_dir) / f"align_L{layers}_S{side}.ckpt", arrays, {"error": result.error})
    return metrics


RUNNERS = {
    "minn_classify": run_minn,
    "no_sim_baseline": run_minn,
    "digital_dnn_baseline": run_minn,
    "power_control": run_minn,
    "all_ms_classify": run_minn,
    "elm_benchmark": run_elm,
    "alignment": run_alignment,
}


def run_experiment(cfg, out_dir=None):
    """Run one experiment; writes metrics.csv and manifest.json into the output directory."""
    cfg = cfg.resolve_seeds()
    out = Path(out_dir or cfg.output)
    with stage("setup"):
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / METRICS_FILE
        if metrics_path.exists():
            metrics_path.unlink()
        write_manifest(cfg, out)
    logger.info("running %s (seed %d) into %s", cfg.kind, cfg.seed, out)
    metrics = RUNNERS[cfg.kind](cfg, out)
    with stage("metrics"):
        metrics.append_csv(metrics_path)
    return metrics_path


def read_metrics(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def _set_path(data, key, value):
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown sweep key {key!r}")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"unknown sweep key {key!r}")
    node[parts[-1]] = value


def sweep(cfg, grid, out_dir=None):
    """One run per point of the Cartesian product of `grid` (dotted key -> values); combined long CSV."""
    base = cfg.model_dump()
    keys = list(grid or {})
    for key in keys:
        _set_path(copy.deepcopy(base), key, None)
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    combined = Metrics()
    for point, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        data = copy.deepcopy(base)
        for key, value in zip(keys, values):
            _set_path(data, key, value)
        with stage(f"sweep point {point}"):
            point_cfg = ExperimentConfig.model_validate(data)
        params = dict(zip(keys, values))
        logger.info("sweep point %d: %s", point, params)
        path = run_experiment(point_cfg, out / f"point{point:03d}")
        combined.rows.extend({**row, "point": point, **params} for row in read_metrics(path))
    sweep_path = out / SWEEP_FILE
    if sweep_path.exists():
        sweep_path.unlink()
    combined.append_csv(sweep_path)
    return sweep_path

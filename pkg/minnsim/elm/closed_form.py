import logging

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..channel import complex_gaussian, noise_power
from ..errors import ConfigError, DataError, DimensionError, StateError

logger = logging.getLogger(__name__)


def _activate(z, kind):
    if kind == "abs":
        return np.abs(z)
    if kind == "abs2":
        return np.abs(z) ** 2
    if kind == "tanh_mag":
        return np.tanh(np.abs(z))
    return np.maximum(np.real(z), 0.0)


def _received(x, model):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None] if single else x
    if batch.ndim != 2 or batch.shape[1] != model.n_features:
        raise DimensionError(f"ELM input shape {list(x.shape)} does not match {model.n_features} features")
    return batch @ model.H.T, single


def elm_hidden(x, model, snr_db=None, rng=None):
    """g = activation(H x), optionally with AWGN at snr_db.

    Noise is referenced to model.ref_power, fixed when the readout is fitted, so one
    sample and a whole batch see the same noise level. Unfitted models fall back
    to the mean received power of the batch at hand.
    """
    z, single = _received(x, model)
    if snr_db is not None and rng is not None:
        ref = model.ref_power or float(np.mean(np.abs(z) ** 2))
        if ref > 0:
            sigma2 = noise_power(snr_db, ref)
            noise = np.sqrt(sigma2) * complex_gaussian(rng, z.shape)
            z = z + (noise if np.iscomplexobj(z) else noise.real * np.sqrt(2.0))
    g = _activate(z, model.activation)
    return g[0] if single else g


def default_ridge(G, scale):
    """scale * trace(G^T G) / h."""
    trace = float(np.sum(G * G))
    return scale * trace / G.shape[1] if trace > 0 else scale


def fit_readout(G, Y, ridge_lambda):
    """W = (G^T G + lambda I)^-1 G^T Y through a Cholesky factorization."""
    G = np.asarray(G, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if G.ndim != 2 or G.shape[0] < 1:
        raise DimensionError(f"G must be a non-empty [n x h] matrix, got {list(G.shape)}")
    if Y.shape[0] != G.shape[0]:
        raise DimensionError(f"{Y.shape[0]} targets for {G.shape[0]} hidden rows")
    if ridge_lambda <= 0:
        raise ConfigError(f"ridge_lambda must be positive, got {ridge_lambda}")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(Y))):
        raise DataError("readout fit received non-finite hidden outputs or targets")
    gram = G.T @ G
    gram[np.diag_indices_from(gram)] += ridge_lambda
    factor = cho_factor(gram, check_finite=False)
    return cho_solve(factor, G.T @ Y, check_finite=False)


def readout_targets(y, n_classes):
    """+-1 single column for binary tasks, one-hot columns otherwise."""
    y = np.asarray(y, dtype=np.int64)
    if np.any((y < 0) | (y >= n_classes)):
        raise DataError(f"labels must lie in [0, {n_classes})")
    if n_classes == 2:
        return np.where(y == 1, 1.0, -1.0)[:, None]
    return np.eye(n_classes)[y]


def fit_elm(model, x, y, snr_db=None, rng=None):
    """Fit the readout of `model` on (x, y); returns W.

    The noise reference and, unless ridge_lambda is fixed, the ridge both come from
    this batch under the current H.
    """
    z, _ = _received(x, model)
    model.ref_power = float(np.mean(np.abs(z) ** 2)) or None
    G = elm_hidden(x, model, snr_db, rng)
    if G.ndim == 1:
        G = G[None]
    model.fitted_lambda = model.ridge_lambda or default_ridge(G, model.ridge_scale)
    model.W = fit_readout(G, readout_targets(y, model.n_classes), model.fitted_lambda)
    logger.debug("ELM readout fitted: %d samples, %d hidden, lambda=%.3e", G.shape[0], model.n_hidden,
                 model.fitted_lambda)
    return model.W


def refit_on_drift(model, H_new, x, y, snr_db=None, rng=None):
    x = np.asarray(x)
    if x.shape[0] == 0:
        raise ConfigError("refit needs a non-empty calibration batch")
    H_new = np.asarray(H_new)
    if H_new.shape != model.H.shape:
        raise DimensionError(f"drifted H {list(H_new.shape)} does not match {list(model.H.shape)}")
    model.H = H_new
    return fit_elm(model, x, y, snr_db, rng)


def elm_predict(x, model, snr_db=None, rng=None):
    """Class indices: argmax of W^T g, or the sign of the single output for binary tasks."""
    if not model.fitted:
        raise StateError("ELM readout is not fitted")
    g = elm_hidden(x, model, snr_db, rng)
    out = g @ model.W
    if model.binary:
        return (out[..., 0] > 0).astype(np.int64)
    return np.argmax(out, axis=-1)


def elm_accuracy(x, y, model, snr_db=None, rng=None):
    return float(np.mean(elm_predict(x, model, snr_db, rng) == np.asarray(y)))


def readout_mse(x, y, model):
    if not model.fitted:
        raise StateError("ELM readout is not fitted")
    residual = elm_hidden(x, model) @ model.W - readout_targets(y, model.n_classes)
    return float(np.mean(residual ** 2))

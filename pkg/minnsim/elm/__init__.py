from .closed_form import (
    default_ridge,
    elm_accuracy,
    elm_hidden,
    elm_predict,
    fit_elm,
    fit_readout,
    readout_mse,
    readout_targets,
    refit_on_drift,
)
from .models import ELM_ACTIVATIONS, ElmModel

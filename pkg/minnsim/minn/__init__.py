from .all_ms import AllMsModel
from .forward import (
    decoder_forward,
    dynamic_phase_controller,
    effective_channel,
    encoder_forward,
    minn_forward,
    power_normalize,
    predict,
    signal_energy,
    transmit_power,
)
from .layers import ConvLayer, DenseLayer
from .models import POWER_MODES, ControllerParams, DecoderParams, EncoderParams, MinnModel

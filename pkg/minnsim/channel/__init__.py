from .fading import (
    add_noise,
    awgn,
    complex_gaussian,
    end_to_end_response,
    geometric_channel,
    noise_power,
    rayleigh_channel,
    ula_steering,
)
from .forms import ChannelConfig
from .models import ChannelRealization
from .sampler import LINK_MODES, ChannelSampler

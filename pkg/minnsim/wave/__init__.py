from .models import ElementGrid, SimStack, carrier_wavelength
from .propagation import (
    coupling_coefficient,
    coupling_matrix,
    detect_class,
    energy_detect,
    propagation_matrix,
    sim_propagate,
    sim_transfer,
)

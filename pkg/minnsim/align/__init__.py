from .approximation import (
    Approximation,
    aligned_accuracy,
    digital_aligned_accuracy,
    optimal_scale,
    selection_realization,
    sim_approximate,
)
from .linear_map import fit_linear_map
from .models import AlignmentTask, collect_encodings

from .models import ComplexParameter, ComplexTensor, GradTape, active_tape, no_grad, parameter
from .ops import (
    ELEMENTWISE_FNS,
    abs2,
    as_tensor,
    combine,
    complex_matmul,
    concat,
    conv2d,
    elementwise,
    exp_j_theta,
    log_softmax,
    pool2d,
    stack_real_imag,
)
from .gradcheck import finite_diff_check

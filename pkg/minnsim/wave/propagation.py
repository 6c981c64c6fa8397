import numpy as np

from ..errors import GeometryError
from ..tensorcore import ComplexTensor
from ..tensorcore import ops


def coupling_coefficient(src, area, dst, normal, wavelength):
    """Diffraction coefficient from a source element (position, area) to a destination point.

    w = (A cos(chi) / d) * (1 / (2 pi d) - j / lambda) * exp(j 2 pi d / lambda)
    """
    if wavelength <= 0:
        raise GeometryError(f"wavelength must be positive, got {wavelength}")
    diff = np.asarray(dst, dtype=np.float64) - np.asarray(src, dtype=np.float64)
    d = float(np.linalg.norm(diff))
    if d == 0.0:
        raise GeometryError(f"coincident source and destination at {tuple(np.asarray(src))}")
    cos_chi = float(np.dot(diff, normal)) / d
    return (area * cos_chi / d) * (1.0 / (2.0 * np.pi * d) - 1j / wavelength) * np.exp(2j * np.pi * d / wavelength)


def coupling_matrix(src_positions, area, dst_positions, normal, wavelength):
    """Vectorised coupling_coefficient; entry (i, j) couples source j to destination i."""
    diff = dst_positions[:, None, :] - src_positions[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    if np.any(d == 0.0):
        raise GeometryError("source and destination elements coincide")
    cos_chi = (diff @ np.asarray(normal, dtype=np.float64)) / d
    return (area * cos_chi / d) * (1.0 / (2.0 * np.pi * d) - 1j / wavelength) * np.exp(2j * np.pi * d / wavelength)


def propagation_matrix(src, dst, wavelength):
    """Constant |dst| x |src| matrix of element-to-element couplings between two grids."""
    src_pos, dst_pos = src.positions(), dst.positions()
    offsets = (dst_pos - src_pos.mean(axis=0)) @ np.asarray(src.normal)
    if np.allclose(offsets, 0.0, atol=1e-12):
        raise GeometryError("grids share a plane; consecutive layers must be separated along the normal")
    return ComplexTensor(coupling_matrix(src_pos, src.element_area, dst_pos, src.normal, wavelength))


def _column(phi):
    return ops.reshape(phi, phi.shape + (1,))


def sim_transfer(stack, phases=None):
    """T = Phi_K P_{K-1->K} ... P_{1->2} Phi_1 with Phi_k = diag(exp(j theta_k)).

    `phases` overrides the stack's own vectors; entries may carry a leading batch
    dimension, giving one transfer matrix per batch row.
    """
    phases = stack.phases if phases is None else phases
    n_first = stack.first.count
    transfer = ops.multiply(_column(ops.exp_j_theta(phases[0])), np.eye(n_first))
    for prop, theta in zip(stack.propagation_matrices(), phases[1:]):
        transfer = ops.complex_matmul(prop, transfer)
        transfer = ops.multiply(_column(ops.exp_j_theta(theta)), transfer)
    return transfer


def sim_propagate(stack, field, phases=None):
    """Push a field (..., n_first, m) through the stack without forming T."""
    phases = stack.phases if phases is None else phases
    x = ops.multiply(_column(ops.exp_j_theta(phases[0])), field)
    for prop, theta in zip(stack.propagation_matrices(), phases[1:]):
        x = ops.complex_matmul(prop, x)
        x = ops.multiply(_column(ops.exp_j_theta(theta)), x)
    return x


def energy_detect(field):
    """Receptor energies |field_c|^2 (differentiable)."""
    return ops.abs2(ops.as_tensor(field))


def detect_class(field):
    """Index of the strongest receptor; ties go to the lowest index."""
    energies = energy_detect(field).data
    return np.argmax(energies, axis=-1)

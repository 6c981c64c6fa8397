import numpy as np

from ..errors import ConditioningError, DimensionError


def fit_linear_map(Z_A, Z_B, ridge=None):
    """M = argmin ||M Z_A - Z_B||_F = Z_B Z_A^+.

    A rank-deficient Z_A needs `ridge`, which switches to
    M = Z_B Z_A^H (Z_A Z_A^H + ridge I)^-1.
    """
    Z_A, Z_B = np.asarray(Z_A), np.asarray(Z_B)
    if Z_A.ndim != 2 or Z_B.ndim != 2 or Z_A.shape[1] != Z_B.shape[1]:
        raise DimensionError(f"unpaired encodings: {list(Z_A.shape)} and {list(Z_B.shape)}")
    d_a = Z_A.shape[0]
    rank = np.linalg.matrix_rank(Z_A)
    if ridge is None:
        if rank < d_a:
            raise ConditioningError(f"Z_A has rank {rank} < {d_a}; pass a ridge to regularise the map")
        return Z_B @ np.linalg.pinv(Z_A)
    gram = Z_A @ Z_A.conj().T + ridge * np.eye(d_a)
    return np.linalg.solve(gram.T, (Z_B @ Z_A.conj().T).T).T

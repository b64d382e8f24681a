"""Pure numpy reference for the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def boolean_product(X, Y):
    if X.shape[1] == 0:
        return np.zeros((Y.shape[0], X.shape[0]), dtype=np.uint8)
    counts = Y.astype(np.float64) @ X.T.astype(np.float64)
    return (counts > 0).astype(np.uint8)


def residual(D, X, Y):
    return int(np.count_nonzero(D != boolean_product(X, Y)))


def eta(M):
    A = M.astype(np.float64)
    G = A.T @ A
    np.fill_diagonal(G, -1.0)
    return int(G.max())

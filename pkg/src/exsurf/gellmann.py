"""Gell-Mann matrices and small SU(3) helpers."""

import numpy as np

SQRT3 = np.sqrt(3.0)

IDENTITY = np.eye(3, dtype=complex)

_L1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
_L2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
_L3 = np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex)
_L4 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
_L5 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)
_L6 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
_L7 = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex)
_L8 = np.diag([1.0, 1.0, -2.0]).astype(complex) / SQRT3

#: lambda_1 .. lambda_8, indexable as GELL_MANN[i-1]
GELL_MANN = (_L1, _L2, _L3, _L4, _L5, _L6, _L7, _L8)


def gell_mann(index: int) -> np.ndarray:
    """Return a copy of the Gell-Mann matrix lambda_index, index in 1..8."""
    if not 1 <= index <= 8:
        raise ValueError(f"Gell-Mann index must be in 1..8, got {index}")
    return GELL_MANN[index - 1].copy()


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b] = ab - ba.

    Exposed so the su(3) structure constants can be read off numerically,
    e.g. commutator(gell_mann(1), gell_mann(2)) == 2i * gell_mann(3).
    """
    return a @ b - b @ a

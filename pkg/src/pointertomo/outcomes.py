"""The six pointer readout outcomes: eigenstates of the pointer Z, X, Y bases."""

from enum import IntEnum

import numpy as np


class OutcomeLabel(IntEnum):
    """Column index of each outcome in probability and count tables."""

    Z0 = 0
    Z1 = 1
    XPLUS = 2
    XMINUS = 3
    YL = 4
    YR = 5


OUTCOME_TEXT = ("0", "1", "+", "-", "L", "R")
TEXT_TO_OUTCOME = {text: OutcomeLabel(i) for i, text in enumerate(OUTCOME_TEXT)}

_S = 1.0 / np.sqrt(2.0)

# Rows follow OutcomeLabel order; L = (|0> + i|1>)/sqrt(2), R = (|0> - i|1>)/sqrt(2)
POINTER_KETS = np.array(
    [
        [1.0, 0.0],
        [0.0, 1.0],
        [_S, _S],
        [_S, -_S],
        [_S, 1j * _S],
        [_S, -1j * _S],
    ],
    dtype=np.complex128,
)


def pointer_projectors() -> np.ndarray:
    """(6, 2, 2) array of |m><m|; the six projectors sum to 3*I."""
    return np.einsum("mi,mj->mij", POINTER_KETS, POINTER_KETS.conj())

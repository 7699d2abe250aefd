"""Pilot matrix: rows drawn without replacement from the unitary DFT."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import dft


@dataclass
class PilotMatrix:
    S: np.ndarray        # (M, K) complex, S @ S^H = I_M
    row_idx: np.ndarray  # (M,) selected DFT rows


def make_pilot(M: int, K: int, rng: np.random.Generator) -> PilotMatrix:
    if not 1 <= M <= K:
        raise ValueError("need 1 <= M <= K for a row-orthonormal pilot")
    rows = np.sort(rng.choice(K, size=M, replace=False))
    S = dft(K, scale="sqrtn")[rows, :]
    return PilotMatrix(S=S, row_idx=rows)

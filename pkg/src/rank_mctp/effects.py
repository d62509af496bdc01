"""Pairwise relative effects and the relative treatment effect vector.

``w[rs, ij]`` is the estimate of P(X_rs < X_ij) + P(X_rs = X_ij) / 2 with
cells flattened as ``i * d + j``. The relative effect of cell ij is the
column mean ``p[ij] = mean_rs w[rs, ij]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .data import Dataset, Design, midranks
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class PairwiseEffects:
    w: np.ndarray
    # twice the midrank numerator, an integer: w = twice_num / (2 n_i n_r)
    twice_num: np.ndarray
    design: Design

    def exact(self, rs: int, ij: int) -> Fraction:
        d = self.design.d
        nr, ni = self.design.n[rs // d], self.design.n[ij // d]
        return Fraction(int(self.twice_num[rs, ij]), 2 * nr * ni)

    def as_vector(self) -> np.ndarray:
        """Stacked vector (w_11', ..., w_ad')' with w_ij = (w_{11ij}, ..., w_{adij})'."""
        return self.w.T.reshape(-1)


def pairwise_effects(data: Dataset) -> PairwiseEffects:
    design = data.design
    m = design.cells
    w = np.empty((m, m))
    num = np.empty((m, m), dtype=np.int64)
    cells = [data.cell_values(c) for c in range(m)]
    sizes = [x.size for x in cells]
    for rs in range(m):
        nr = sizes[rs]
        num[rs, rs] = nr * nr
        w[rs, rs] = 0.5
        for ij in range(rs + 1, m):
            ni = sizes[ij]
            ranks = midranks(np.concatenate([cells[ij], cells[rs]]))
            # sum of midranks of cell ij among cells ij + rs, minus n_i(n_i+1)/2
            twice = int(round(2.0 * ranks[:ni].sum())) - ni * (ni + 1)
            num[rs, ij] = twice
            num[ij, rs] = 2 * ni * nr - twice
            w[rs, ij] = twice / (2 * ni * nr)
            w[ij, rs] = num[ij, rs] / (2 * ni * nr)
    w.setflags(write=False)
    num.setflags(write=False)
    return PairwiseEffects(w, num, design)


def e_matrix(cells: int) -> np.ndarray:
    """E = I ⊗ (1/m) 1', mapping the stacked pairwise vector to p."""
    return np.kron(np.eye(cells), np.full((1, cells), 1.0 / cells))


def relative_effects(w: PairwiseEffects, design: Design | None = None) -> np.ndarray:
    design = design or w.design
    m = design.cells
    if w.w.shape != (m, m):
        raise DimensionMismatch(f"pairwise effects have shape {w.w.shape}, design needs {(m, m)}")
    return w.w.mean(axis=0)


def estimate(data: Dataset) -> tuple[PairwiseEffects, np.ndarray]:
    w = pairwise_effects(data)
    return w, relative_effects(w)

"""Contrast families and their projection matrices."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .data import Design
from .errors import DimensionMismatch, DimensionTooSmall, ValidationError

KINDS = ("tukey", "dunnett", "average", "changepoint", "centering")
EFFECTS = ("main_A", "main_D", "interaction", "whole_cell")


@dataclass(frozen=True, eq=False)
class ContrastFamily:
    C: np.ndarray
    labels: tuple[str, ...]
    kind: str = "user"

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[0] == 0:
            raise ValidationError("contrast family has no rows")
        if len(self.labels) != C.shape[0]:
            raise DimensionMismatch(f"{len(self.labels)} labels for {C.shape[0]} contrast rows")
        scale = np.abs(C).max(axis=1)
        if np.any(scale == 0):
            raise ValidationError("contrast family contains a zero row")
        if np.any(np.abs(C.sum(axis=1)) > 1e-12 * np.maximum(scale, 1.0) * C.shape[1]):
            raise ValidationError("contrast rows must sum to zero")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)

    @property
    def q(self) -> int:
        return self.C.shape[0]

    @property
    def dim(self) -> int:
        return self.C.shape[1]


def _rows(kind: str, m: int, n: Sequence[int] | None) -> list[list[Fraction]]:
    """Exact rational rows for each built-in family."""
    if kind == "tukey":
        rows = []
        for i in range(m):
            for j in range(i + 1, m):
                row = [Fraction(0)] * m
                row[i], row[j] = Fraction(-1), Fraction(1)
                rows.append(row)
        return rows
    if kind == "dunnett":
        rows = []
        for j in range(1, m):
            row = [Fraction(0)] * m
            row[0], row[j] = Fraction(-1), Fraction(1)
            rows.append(row)
        return rows
    if kind == "average":
        off = Fraction(-1, m - 1)
        return [[Fraction(1) if i == l else off for i in range(m)] for l in range(m)]
    if kind == "changepoint":
        if n is None:
            raise ValidationError("changepoint contrasts need the level sizes")
        if len(n) != m:
            raise DimensionMismatch(f"{len(n)} sizes for dimension {m}")
        n = [int(x) for x in n]
        rows = []
        for l in range(1, m):
            left, right = sum(n[:l]), sum(n[l:])
            rows.append([Fraction(-n[i], left) if i < l else Fraction(n[i], right) for i in range(m)])
        return rows
    if kind == "centering":
        return [[Fraction(1 if i == l else 0) - Fraction(1, m) for i in range(m)] for l in range(m)]
    raise ValidationError(f"unknown contrast kind {kind!r}; choose from {KINDS}")


def _labels(kind: str, m: int, names: Sequence[str]) -> list[str]:
    if kind == "tukey":
        return [f"{names[j]} vs. {names[i]}" for i in range(m) for j in range(i + 1, m)]
    if kind == "dunnett":
        return [f"{names[j]} vs. {names[0]}" for j in range(1, m)]
    if kind == "average":
        return [f"{names[l]} vs. average" for l in range(m)]
    if kind == "changepoint":
        return [f"{'+'.join(names[l:])} vs. {'+'.join(names[:l])}" for l in range(1, m)]
    return [f"{names[l]} vs. mean" for l in range(m)]


def build_contrast(
    kind: str,
    m: int,
    n: Sequence[int] | None = None,
    names: Sequence[str] | None = None,
) -> ContrastFamily:
    """Tukey, Dunnett, Average, Changepoint or centering family of dimension ``m``."""
    if m < 2:
        raise DimensionTooSmall(f"{kind} contrasts need dimension >= 2, got {m}")
    names = list(names) if names is not None else [str(i + 1) for i in range(m)]
    if len(names) != m:
        raise DimensionMismatch(f"{len(names)} names for dimension {m}")
    rows = _rows(kind, m, n)
    C = np.array([[float(x) for x in row] for row in rows])
    return ContrastFamily(C, tuple(_labels(kind, m, names)), kind)


def _mean_row(m: int) -> np.ndarray:
    return np.full((1, m), 1.0 / m)


def factorial_contrast(
    effect: str,
    design: Design,
    base: ContrastFamily | str = "centering",
    base_d: ContrastFamily | str | None = None,
    group_names: Sequence[str] | None = None,
    time_names: Sequence[str] | None = None,
) -> ContrastFamily:
    """Lift a one-factor family to the a*d cells.

    ``main_A``: C_A ⊗ (1/d) 1'_d; ``main_D``: (1/a) 1'_a ⊗ C_D;
    ``interaction``: C_A ⊗ C_D (both built from ``base``, or ``base_d`` for the
    repeated-measures factor); ``whole_cell``: ``base`` applied to all cells.
    """
    a, d = design.a, design.d
    gnames = list(group_names) if group_names is not None else [f"group {i + 1}" for i in range(a)]
    tnames = list(time_names) if time_names is not None else [f"timepoint {j + 1}" for j in range(d)]

    def resolve(b, m, names, sizes):
        if isinstance(b, ContrastFamily):
            if b.dim != m:
                raise DimensionMismatch(f"base family has dimension {b.dim}, expected {m}")
            return b
        return build_contrast(b, m, sizes if b == "changepoint" else None, names)

    if effect == "main_A":
        CA = resolve(base, a, gnames, design.n)
        return ContrastFamily(np.kron(CA.C, _mean_row(d)), CA.labels, CA.kind)
    if effect == "main_D":
        CD = resolve(base, d, tnames, [1] * d)
        return ContrastFamily(np.kron(_mean_row(a), CD.C), CD.labels, CD.kind)
    if effect == "interaction":
        CA = resolve(base, a, gnames, design.n)
        CD = resolve(base if base_d is None else base_d, d, tnames, [1] * d)
        labels = tuple(f"({la}) x ({ld})" for la in CA.labels for ld in CD.labels)
        return ContrastFamily(np.kron(CA.C, CD.C), labels, CA.kind)
    if effect == "whole_cell":
        names = [f"{g}:{t}" for g in gnames for t in tnames]
        sizes = [n for n in design.n for _ in range(d)]
        return resolve(base, a * d, names, sizes)
    raise ValidationError(f"unknown effect {effect!r}; choose from {EFFECTS}")


def pinv_psd(A: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix via eigendecomposition."""
    vals, vecs = np.linalg.eigh((A + A.T) / 2)
    cutoff = rtol * max(np.abs(vals).max(initial=0.0), 0.0)
    inv = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, vals, 1.0), 0.0)
    return (vecs * inv) @ vecs.T


def projection(C: ContrastFamily | np.ndarray) -> np.ndarray:
    """M = C'(CC')^+ C, the orthogonal projector onto the row space of C."""
    C = C.C if isinstance(C, ContrastFamily) else np.atleast_2d(np.asarray(C, dtype=float))
    M = C.T @ pinv_psd(C @ C.T) @ C
    return (M + M.T) / 2


def read_contrast_tsv(text: str, m: int) -> ContrastFamily:
    """User contrast file: one row per contrast, tab separated, optional leading label."""
    rows, labels = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.rstrip("\n").split("\t")
        try:
            vals = [float(x) for x in fields]
            label = f"contrast {len(rows) + 1}"
        except ValueError:
            label, fields = fields[0], fields[1:]
            try:
                vals = [float(x) for x in fields]
            except ValueError:
                raise ValidationError(f"contrast file line {lineno}: non-numeric coefficient") from None
        if len(vals) != m:
            raise DimensionMismatch(f"contrast file line {lineno}: {len(vals)} coefficients, expected {m}")
        rows.append(vals)
        labels.append(label)
    if not rows:
        raise ValidationError("contrast file has no rows")
    return ContrastFamily(np.array(rows), tuple(labels), "user")

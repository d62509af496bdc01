"""Long-format repeated-measures data and midranks.

A dataset holds one real observation for every (group i, repeated measure j,
subject k) with subjects nested in groups. Internally each group is stored as
an ``(n_i, d)`` array; cells are flattened everywhere as ``i * d + j``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DimensionMismatch,
    DuplicateCell,
    EmptyInput,
    FewerThanTwoSubjects,
    MissingCell,
    NonNumericValue,
    ValidationError,
)

DEFAULT_COLUMNS = {"subject": "subject", "group": "group", "time": "time", "value": "value"}


@dataclass(frozen=True)
class Design:
    a: int
    d: int
    n: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(x) for x in self.n)
        object.__setattr__(self, "n", n)
        if self.a < 1 or self.d < 1:
            raise ValidationError(f"need a >= 1 and d >= 1, got a={self.a}, d={self.d}")
        if len(n) != self.a:
            raise DimensionMismatch(f"{len(n)} group sizes given for a={self.a} groups")
        small = [i for i, ni in enumerate(n) if ni < 2]
        if small:
            raise FewerThanTwoSubjects(
                f"every group needs at least two subjects; group(s) {small} have {[n[i] for i in small]}",
                groups=small,
            )

    @property
    def N(self) -> int:
        return sum(self.n)

    @property
    def cells(self) -> int:
        return self.a * self.d

    def cell(self, i: int, j: int) -> int:
        return i * self.d + j

    def group_of_cell(self, c: int) -> int:
        return c // self.d


@dataclass(frozen=True, eq=False)
class Dataset:
    """Complete split-plot data; immutable after construction."""

    groups: tuple[np.ndarray, ...]
    group_names: tuple[str, ...] = ()
    time_names: tuple[str, ...] = ()
    subject_ids: tuple[tuple[str, ...], ...] = ()
    design: Design = field(init=False)

    def __post_init__(self):
        arrays = []
        for g in self.groups:
            x = np.array(g, dtype=float)
            if x.ndim != 2:
                raise DimensionMismatch("each group must be a (subjects x repeated measures) array")
            if not np.all(np.isfinite(x)):
                raise NonNumericValue("observations must be finite")
            x.setflags(write=False)
            arrays.append(x)
        if not arrays:
            raise EmptyInput("dataset has no groups")
        d = arrays[0].shape[1]
        if any(x.shape[1] != d for x in arrays):
            raise DimensionMismatch("all groups must have the same number of repeated measures")
        object.__setattr__(self, "groups", tuple(arrays))
        object.__setattr__(self, "design", Design(len(arrays), d, tuple(x.shape[0] for x in arrays)))
        a = len(arrays)
        if not self.group_names:
            object.__setattr__(self, "group_names", tuple(f"group {i + 1}" for i in range(a)))
        if not self.time_names:
            object.__setattr__(self, "time_names", tuple(f"timepoint {j + 1}" for j in range(d)))
        if not self.subject_ids:
            ids = tuple(tuple(f"{i + 1}.{k + 1}" for k in range(x.shape[0])) for i, x in enumerate(arrays))
            object.__setattr__(self, "subject_ids", ids)
        if len(self.group_names) != a or len(self.time_names) != d:
            raise DimensionMismatch("label counts do not match the design")

    @classmethod
    def from_arrays(cls, groups: Iterable[np.ndarray], group_names=(), time_names=()) -> "Dataset":
        return cls(tuple(groups), tuple(group_names), tuple(time_names))

    def cell_values(self, c: int) -> np.ndarray:
        i, j = divmod(c, self.design.d)
        return self.groups[i][:, j]

    def cell_names(self) -> list[str]:
        return [f"{g}:{t}" for g in self.group_names for t in self.time_names]

    def map_values(self, fn) -> "Dataset":
        """Apply ``fn`` elementwise to every observation, keeping labels."""
        return Dataset(tuple(fn(x) for x in self.groups), self.group_names, self.time_names, self.subject_ids)

    def same_values(self, other: "Dataset") -> bool:
        return self.design == other.design and all(
            np.array_equal(x, y) for x, y in zip(self.groups, other.groups)
        )


def midranks(values: Sequence[float]) -> np.ndarray:
    """Midranks: ``#(smaller) + (#(equal) + 1) / 2`` for every entry."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyInput("midranks of an empty vector")
    if not np.all(np.isfinite(x)):
        raise NonNumericValue("midranks need finite values")
    return rankdata(x, method="average")


def _ordered(seen: list[str], explicit: Sequence[str] | None, what: str) -> list[str]:
    if explicit is None:
        return seen
    explicit = [str(x) for x in explicit]
    if sorted(explicit) != sorted(seen):
        raise ValidationError(f"{what} order {explicit} does not match levels in data {seen}")
    return explicit


def ingest_long_csv(
    source: TextIO | bytes | str,
    columns: Mapping[str, str] | None = None,
    group_order: Sequence[str] | None = None,
    time_order: Sequence[str] | None = None,
) -> Dataset:
    """Read a long-format CSV (one row per subject and repeated measure).

    ``source`` may be a text stream, raw bytes, or a CSV string. Levels are
    ordered by first appearance unless ``group_order``/``time_order`` is given.
    """
    cols = dict(DEFAULT_COLUMNS)
    cols.update(columns or {})
    if isinstance(source, bytes):
        source = source.decode("utf-8-sig")
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise EmptyInput("CSV has no header row")
    missing = [c for c in cols.values() if c not in reader.fieldnames]
    if missing:
        raise ValidationError(f"CSV lacks column(s) {missing}; header is {reader.fieldnames}")

    groups_seen: list[str] = []
    times_seen: list[str] = []
    subj_group: dict[str, str] = {}
    subj_order: list[str] = []
    cells: dict[tuple[str, str], float] = {}
    for lineno, row in enumerate(reader, start=2):
        s, g, t = row[cols["subject"]], row[cols["group"]], row[cols["time"]]
        raw = row[cols["value"]]
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise NonNumericValue(f"line {lineno}: value {raw!r} is not numeric", line=lineno) from None
        if not math.isfinite(v):
            raise NonNumericValue(f"line {lineno}: value {raw!r} is not finite", line=lineno)
        if g not in groups_seen:
            groups_seen.append(g)
        if t not in times_seen:
            times_seen.append(t)
        if s in subj_group and subj_group[s] != g:
            raise ValidationError(f"line {lineno}: subject {s!r} appears in groups {subj_group[s]!r} and {g!r}")
        if s not in subj_group:
            subj_group[s] = g
            subj_order.append(s)
        if (s, t) in cells:
            raise DuplicateCell(f"line {lineno}: subject {s!r} has two values for {t!r}", subject=s, time=t)
        cells[(s, t)] = v
    if not cells:
        raise EmptyInput("CSV has no data rows")

    gnames = _ordered(groups_seen, group_order, "group")
    tnames = _ordered(times_seen, time_order, "time")
    arrays, ids = [], []
    for g in gnames:
        subjects = [s for s in subj_order if subj_group[s] == g]
        block = np.empty((len(subjects), len(tnames)))
        for k, s in enumerate(subjects):
            for j, t in enumerate(tnames):
                if (s, t) not in cells:
                    raise MissingCell(f"subject {s!r} (group {g!r}) has no value for {t!r}", subject=s, time=t)
                block[k, j] = cells[(s, t)]
        arrays.append(block)
        ids.append(tuple(subjects))
    return Dataset(tuple(arrays), tuple(gnames), tuple(tnames), tuple(ids))


def to_long_csv(data: Dataset, columns: Mapping[str, str] | None = None) -> str:
    """Serialize to long-format CSV; ``ingest_long_csv`` inverts this exactly."""
    cols = dict(DEFAULT_COLUMNS)
    cols.update(columns or {})
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([cols["subject"], cols["group"], cols["time"], cols["value"]])
    for g, x, ids in zip(data.group_names, data.groups, data.subject_ids):
        for k, s in enumerate(ids):
            for j, t in enumerate(data.time_names):
                w.writerow([s, g, t, repr(float(x[k, j]))])
    return out.getvalue()

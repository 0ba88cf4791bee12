"""Typed tabular data with an explicit per-cell missingness mask.

Columns are either continuous or categorical (integer codes with a stored
label dictionary).  Values live in a column-major float matrix; missing
cells are NaN and carry mask=False.  CSV ingestion infers column kinds
unless a schema (in-memory or sidecar file) says otherwise.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .rng import OP_MCAR, OP_MOONS, stream

# Tokens treated as missing on input, compared case-insensitively.
NA_TOKENS = frozenset({"", "na", "nan"})

# Integer-valued columns with at most this many distinct values are inferred
# categorical; chosen to match the default bin count so a column never
# quantizes to more bins than it has values.
CATEGORICAL_INFERENCE_MAX = 20


class ParseError(ValueError):
    """CSV content that cannot be interpreted under the (inferred) schema."""


@dataclass(frozen=True)
class FeatureKind:
    """Column type: continuous, or categorical with a fixed cardinality."""

    kind: str  # "continuous" | "categorical"
    cardinality: int | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise ValueError(f"unknown feature kind: {self.kind!r}")
        if self.kind == "categorical":
            if self.cardinality is None or self.cardinality < 2:
                raise ValueError("categorical cardinality must be >= 2")
        elif self.cardinality is not None:
            raise ValueError("continuous features have no cardinality")

    @classmethod
    def continuous(cls) -> "FeatureKind":
        return cls("continuous")

    @classmethod
    def categorical(cls, cardinality: int) -> "FeatureKind":
        return cls("categorical", cardinality)

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"


class TabularDataset:
    """Immutable n_rows x n_features value matrix plus observedness mask.

    Parameters
    ----------
    values : (n, d) array
        Cell values; categorical cells hold integer codes. Masked cells may
        hold anything (stored as NaN).
    mask : (n, d) bool array
        True where the cell is observed.
    schema : list of (name, FeatureKind)
    labels : dict mapping categorical column index -> list of label strings,
        one per code. Optional; synthesized as "0","1",... when absent.
    """

    def __init__(self, values, mask, schema, labels=None):
        values = np.asfortranarray(values, dtype=np.float64)
        mask = np.asfortranarray(mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ValueError("values and mask must be 2-D with equal shapes")
        if len(schema) != values.shape[1]:
            raise ValueError(
                f"schema has {len(schema)} columns, values have {values.shape[1]}"
            )
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("observed cells must be finite")
        values = values.copy(order="F")
        values[~mask] = np.nan

        self.values = values
        self.mask = mask
        self.schema = list(schema)
        self.labels = {}
        for j, (name, kind) in enumerate(self.schema):
            if not kind.is_categorical:
                continue
            col = values[:, j][mask[:, j]]
            if col.size and (np.any(col != np.round(col)) or col.min() < 0
                             or col.max() >= kind.cardinality):
                raise ValueError(
                    f"column {name!r}: categorical codes must be integers in "
                    f"[0, {kind.cardinality})"
                )
            if labels and j in labels:
                lab = list(labels[j])
                if len(lab) != kind.cardinality:
                    raise ValueError(f"column {name!r}: {len(lab)} labels for "
                                     f"cardinality {kind.cardinality}")
                self.labels[j] = lab
            else:
                self.labels[j] = [str(c) for c in range(kind.cardinality)]
        self.values.setflags(write=False)
        self.mask.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def column_names(self) -> list[str]:
        return [name for name, _ in self.schema]

    def column(self, j: int) -> np.ndarray:
        """Observed values of column j (1-D, missing cells dropped)."""
        return self.values[:, j][self.mask[:, j]]

    def equals(self, other: "TabularDataset") -> bool:
        """Bit-exact equality of schema, mask and observed values."""
        if self.schema != other.schema or self.labels != other.labels:
            return False
        if not np.array_equal(self.mask, other.mask):
            return False
        return np.array_equal(self.values[self.mask], other.values[other.mask])


def _parse_float(token, row_idx, col_name):
    try:
        v = float(token)
    except ValueError:
        raise ParseError(
            f"row {row_idx}, column {col_name!r}: non-numeric token {token!r} "
            f"in continuous column"
        ) from None
    if not math.isfinite(v):
        raise ParseError(
            f"row {row_idx}, column {col_name!r}: non-finite value {token!r}"
        )
    return v


def _is_na(token: str) -> bool:
    return token.strip().lower() in NA_TOKENS


def _sort_labels(tokens: set[str]) -> list[str]:
    # Numeric label sets sort by value so {"0","1","10"} keeps natural order;
    # anything else sorts lexicographically.
    try:
        return sorted(tokens, key=float)
    except ValueError:
        return sorted(tokens)


def load_schema(path) -> list[tuple[str, FeatureKind]]:
    """Read a sidecar schema file: one `name,kind[,cardinality]` line per column."""
    schema = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            name = row[0].strip()
            kind = row[1].strip().lower() if len(row) > 1 else ""
            if kind == "continuous":
                schema.append((name, FeatureKind.continuous()))
            elif kind == "categorical":
                if len(row) < 3:
                    raise ParseError(
                        f"schema line {lineno}: categorical column {name!r} "
                        f"needs a cardinality"
                    )
                schema.append((name, FeatureKind.categorical(int(row[2]))))
            else:
                raise ParseError(f"schema line {lineno}: unknown kind {kind!r}")
    return schema


def load_csv(path, schema_hint=None, labels_hint=None) -> TabularDataset:
    """Load an RFC-4180 CSV (header row mandatory) into a TabularDataset.

    Empty/NA cells become masked.  Without a schema hint, column kinds are
    inferred: columns containing non-numeric tokens are categorical; numeric
    integer-valued columns with <= 20 distinct values are categorical; the
    rest are continuous.  labels_hint (column index -> label list) pins the
    code assignment of categorical columns, e.g. to a fitted model's mapping.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: header row is mandatory") from None
        rows = []
        for i, row in enumerate(reader):
            if not row:
                row = [""] * len(header)  # blank line: a row of NA cells
            if len(row) != len(header):
                raise ParseError(
                    f"row {i}: expected {len(header)} cells, got {len(row)}"
                )
            rows.append(row)

    n, d = len(rows), len(header)
    if schema_hint is not None:
        if len(schema_hint) != d:
            raise ParseError(
                f"schema hint has {len(schema_hint)} columns, file has {d}"
            )
        hinted_names = [name for name, _ in schema_hint]
        if hinted_names != header:
            raise ParseError(
                f"schema hint column names {hinted_names} do not match header {header}"
            )

    values = np.full((n, d), np.nan, order="F")
    mask = np.zeros((n, d), dtype=bool, order="F")
    schema = []
    labels = {}

    for j, name in enumerate(header):
        cells = [(i, rows[i][j]) for i in range(n) if not _is_na(rows[i][j])]
        hint = schema_hint[j][1] if schema_hint is not None else None

        numeric = None
        if hint is None or not hint.is_categorical:
            numeric = True
            for _, tok in cells:
                try:
                    float(tok)
                except ValueError:
                    numeric = False
                    break

        if hint is not None:
            kind = hint
        elif not numeric:
            kind = None  # label column, cardinality known after de-dup below
        else:
            vals = {float(tok) for _, tok in cells}
            if vals and all(v == round(v) for v in vals) and len(vals) <= CATEGORICAL_INFERENCE_MAX:
                kind = None if len(vals) >= 2 else FeatureKind.continuous()
            else:
                kind = FeatureKind.continuous()

        if kind is not None and not kind.is_categorical:
            for i, tok in cells:
                values[i, j] = _parse_float(tok, i, name)
                mask[i, j] = True
            schema.append((name, kind))
            continue

        # Categorical: map distinct tokens to codes.
        distinct = _sort_labels({tok for _, tok in cells})
        if kind is None:
            if len(distinct) < 2:
                raise ParseError(
                    f"column {name!r}: inferred categorical but only "
                    f"{len(distinct)} distinct value(s)"
                )
            kind = FeatureKind.categorical(len(distinct))
        if labels_hint is not None and j in labels_hint:
            distinct = list(labels_hint[j])
            unknown = {tok for _, tok in cells} - set(distinct)
            if unknown:
                raise ParseError(
                    f"column {name!r}: labels {sorted(unknown)} not in the "
                    f"provided label mapping"
                )
        elif len(distinct) > kind.cardinality:
            raise ParseError(
                f"column {name!r}: {len(distinct)} distinct labels exceed "
                f"declared cardinality {kind.cardinality}"
            )
        elif len(distinct) < kind.cardinality:
            # Hinted cardinality larger than what the file shows: codes are
            # the numeric tokens themselves when they look like codes.
            if all(_looks_numeric(tok) for tok in distinct) and \
                    all(tok == str(int(float(tok))) for tok in distinct):
                distinct = [str(c) for c in range(kind.cardinality)]
            else:
                distinct = distinct + [
                    f"__unseen_{k}" for k in range(kind.cardinality - len(distinct))
                ]
        code = {tok: c for c, tok in enumerate(distinct)}
        for i, tok in cells:
            values[i, j] = code[tok]
            mask[i, j] = True
        schema.append((name, kind))
        labels[j] = distinct

    return TabularDataset(values, mask, schema, labels)


def _looks_numeric(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def save_csv(data: TabularDataset, path) -> None:
    """Write a dataset back to CSV; masked cells become empty, floats use repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.column_names)
        for i in range(data.n_rows):
            row = []
            for j, (_, kind) in enumerate(data.schema):
                if not data.mask[i, j]:
                    row.append("")
                elif kind.is_categorical:
                    row.append(data.labels[j][int(data.values[i, j])])
                else:
                    row.append(repr(float(data.values[i, j])))
            writer.writerow(row)


def two_moons(n: int, noise: float, seed: int) -> TabularDataset:
    """Two interleaved half-circles with isotropic Gaussian noise.

    Moon 1 is the upper half of the unit circle centred at the origin;
    moon 2 is its point reflection shifted by (1, -0.5), i.e. the lower half
    of the unit circle centred at (1, 0.5).  Points are spread uniformly in
    angle along each arc.
    """
    if n < 2:
        raise ValueError("two_moons needs n >= 2")
    n_out = n // 2
    n_in = n - n_out
    theta_out = np.linspace(0.0, np.pi, n_out)
    theta_in = np.linspace(0.0, np.pi, n_in)
    x = np.concatenate([np.cos(theta_out), 1.0 - np.cos(theta_in)])
    y = np.concatenate([np.sin(theta_out), 0.5 - np.sin(theta_in)])
    pts = np.column_stack([x, y])
    if noise > 0:
        pts = pts + stream(seed, OP_MOONS).normal(0.0, noise, size=pts.shape)
    schema = [("x", FeatureKind.continuous()), ("y", FeatureKind.continuous())]
    return TabularDataset(pts, np.ones((n, 2), dtype=bool), schema)


def apply_mcar(
    data: TabularDataset,
    row_prob: float,
    cell_prob: float,
    protected_cols=(),
    seed: int = 0,
) -> TabularDataset:
    """Mask cells completely at random; returns a copy, input untouched.

    Each row is selected with probability row_prob; within selected rows each
    observed, non-protected cell is masked with probability cell_prob.
    """
    if not (0.0 <= row_prob <= 1.0 and 0.0 <= cell_prob <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    protected = set(protected_cols)
    for j in protected:
        if not 0 <= j < data.n_features:
            raise IndexError(f"protected column {j} out of range")
    rng = stream(seed, OP_MCAR)
    rows = rng.random(data.n_rows) < row_prob
    cells = rng.random((data.n_rows, data.n_features)) < cell_prob
    drop = rows[:, None] & cells & data.mask
    if protected:
        drop[:, sorted(protected)] = False
    return TabularDataset(data.values, data.mask & ~drop, data.schema, data.labels)

"""Typed tabular cases, schema loading, and brute-force neighbor queries.

A :class:`Dataset` is the fitted "model" of this package: there is no
training step beyond storing the cases and estimating feature residuals.
Cases are kept both as raw values and as a numeric encoding (continuous
values as-is, nominal tokens as category codes, ordinal tokens as ranks)
which is what the vectorized distance code consumes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import DataError, DomainError, ParseError, SchemaError


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    NOMINAL = "nominal"
    ORDINAL = "ordinal"


@dataclass(frozen=True)
class FeatureSpec:
    """Declaration of one column.

    ``categories`` is the declared token set for nominal features and the
    ordered rank list for ordinal features; it is empty for continuous ones.
    ``residual`` and ``weight`` are filled in by residual fitting.
    """

    name: str
    kind: FeatureKind = FeatureKind.CONTINUOUS
    categories: tuple[str, ...] = ()
    residual: float = 0.0
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        if self.kind is FeatureKind.ORDINAL and not self.categories:
            raise SchemaError(f"ordinal feature {self.name!r} needs a non-empty category list")
        if self.kind is FeatureKind.CONTINUOUS and self.categories:
            raise SchemaError(f"continuous feature {self.name!r} cannot declare categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaError(f"feature {self.name!r} has duplicate categories")
        if not (self.residual >= 0 and self.weight >= 0):
            raise SchemaError(f"feature {self.name!r}: residual and weight must be >= 0")

    @property
    def is_continuous(self) -> bool:
        return self.kind is FeatureKind.CONTINUOUS

    @property
    def is_nominal(self) -> bool:
        return self.kind is FeatureKind.NOMINAL

    def encode(self, value) -> float:
        """Map a raw value to its numeric code; ``None`` maps to NaN."""
        if value is None:
            return math.nan
        if self.is_continuous:
            try:
                x = float(value)
            except (TypeError, ValueError):
                raise DomainError(f"feature {self.name!r}: {value!r} is not a real number") from None
            if not math.isfinite(x):
                raise DomainError(f"feature {self.name!r}: non-finite value {value!r}")
            return x
        token = str(value)
        try:
            return float(self.categories.index(token))
        except ValueError:
            raise DomainError(
                f"feature {self.name!r}: token {token!r} not in declared categories {list(self.categories)}"
            ) from None

    def decode(self, code: float):
        if self.is_continuous:
            return float(code)
        return self.categories[int(code)]


@dataclass(frozen=True)
class Case:
    id: int
    values: tuple


@dataclass(frozen=True)
class NeighborSet:
    """Nearest cases to a query, ascending by distance then case id."""

    query: int | None
    entries: tuple[tuple[int, float], ...]
    k: int

    @property
    def ids(self) -> list[int]:
        return [i for i, _ in self.entries]

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for _, d in self.entries], dtype=float)

    def __len__(self):
        return len(self.entries)


class Dataset:
    """Immutable case store.

    Parameters
    ----------
    specs : sequence of FeatureSpec
        One spec per column. Nominal specs with no declared categories get
        the sorted set of observed tokens.
    rows : iterable of sequences
        Raw values, one per spec.
    target : int or str, optional
        Index or name of the prediction target column.
    """

    def __init__(self, specs: Sequence[FeatureSpec], rows: Iterable[Sequence[Any]], target=None):
        rows = [tuple(r) for r in rows]
        specs = list(specs)
        for r_idx, row in enumerate(rows):
            if len(row) != len(specs):
                raise SchemaError(f"row {r_idx}: expected {len(specs)} values, got {len(row)}")
        for j, spec in enumerate(specs):
            if spec.is_nominal and not spec.categories:
                tokens = sorted({str(row[j]) for row in rows if row[j] is not None})
                specs[j] = replace(spec, categories=tuple(tokens))
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")
        self._specs = tuple(specs)
        if isinstance(target, str):
            if target not in names:
                raise SchemaError(f"target {target!r} is not a declared feature")
            target = names.index(target)
        if target is not None and not 0 <= target < len(specs):
            raise SchemaError(f"target index {target} out of range")
        self._target = target

        X = np.empty((len(rows), len(specs)), dtype=float)
        values = []
        for r_idx, row in enumerate(rows):
            clean = []
            for j, (spec, v) in enumerate(zip(self._specs, row)):
                if v is None:
                    raise SchemaError(f"row {r_idx}: missing value for feature {spec.name!r}")
                try:
                    X[r_idx, j] = spec.encode(v)
                except DomainError as exc:
                    raise SchemaError(f"row {r_idx}: {exc}") from None
                clean.append(float(v) if spec.is_continuous else str(v))
            values.append(tuple(clean))
        X.setflags(write=False)
        self._X = X
        self._cases = tuple(Case(i, v) for i, v in enumerate(values))

    @property
    def specs(self) -> tuple[FeatureSpec, ...]:
        return self._specs

    @property
    def cases(self) -> tuple[Case, ...]:
        return self._cases

    @property
    def target(self) -> int | None:
        return self._target

    @property
    def X(self) -> np.ndarray:
        """Read-only encoded matrix, shape (n_cases, n_features)."""
        return self._X

    @property
    def n_cases(self) -> int:
        return len(self._cases)

    @property
    def n_features(self) -> int:
        return len(self._specs)

    def __len__(self):
        return self.n_cases

    def __repr__(self):
        return f"Dataset(n_cases={self.n_cases}, features={[s.name for s in self._specs]}, target={self._target})"

    def feature_index(self, name: str) -> int:
        for j, s in enumerate(self._specs):
            if s.name == name:
                return j
        raise KeyError(name)

    def column(self, j: int) -> list:
        return [c.values[j] for c in self._cases]

    def encode_query(self, values: Sequence[Any]) -> np.ndarray:
        """Encode one query row. ``None`` entries (e.g. an unknown target) become NaN."""
        if len(values) != self.n_features:
            raise SchemaError(f"query has {len(values)} values, expected {self.n_features}")
        return np.array([s.encode(v) for s, v in zip(self._specs, values)], dtype=float)

    def subset(self, ids: Sequence[int]) -> "Dataset":
        """New dataset holding the given cases, renumbered densely in the given order."""
        return Dataset(self._specs, [self._cases[i].values for i in ids], self._target)

    def with_specs(self, specs: Sequence[FeatureSpec]) -> "Dataset":
        return Dataset(specs, [c.values for c in self._cases], self._target)

    def drop_feature(self, j: int) -> "Dataset":
        """Copy without column ``j``; the target is cleared if it was ``j``."""
        specs = self._specs[:j] + self._specs[j + 1:]
        target = None if self._target in (None, j) else self._target - (self._target > j)
        return Dataset(specs, [c.values[:j] + c.values[j + 1:] for c in self._cases], target)

    def with_case(self, values: Sequence[Any]) -> "Dataset":
        """Copy with one case appended (id = n_cases)."""
        return Dataset(self._specs, [c.values for c in self._cases] + [tuple(values)], self._target)


# --------------------------------------------------------------------------
# loading


def load_schema(path) -> tuple[list[FeatureSpec], str | None]:
    """Read a schema document.

    The document is a flat JSON object mapping each column name to
    ``{"kind": ..., "categories": [...], "target": true}``; ``categories``
    is required for ordinal columns and optional for nominal ones, and at
    most one column may set ``target``.
    """
    if isinstance(path, Mapping):
        doc = path
    else:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema {path}: invalid JSON ({exc})") from None
    if not isinstance(doc, Mapping) or not doc:
        raise SchemaError("schema must be a non-empty object mapping column -> declaration")
    specs, target = [], None
    for name, decl in doc.items():
        if not isinstance(decl, Mapping) or "kind" not in decl:
            raise SchemaError(f"column {name!r}: declaration needs a 'kind'")
        try:
            kind = FeatureKind(str(decl["kind"]).lower())
        except ValueError:
            raise SchemaError(f"column {name!r}: unknown kind {decl['kind']!r}") from None
        specs.append(FeatureSpec(name, kind, tuple(decl.get("categories", ()))))
        if decl.get("target"):
            if target is not None:
                raise SchemaError(f"more than one target column ({target!r}, {name!r})")
            target = name
    return specs, target


def _read_rows(csv_path, specs: Sequence[FeatureSpec], optional: Sequence[str] = ()):
    """Yield raw rows ordered like ``specs``; columns in ``optional`` may be absent (-> None)."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{csv_path}: empty file (a header row is required)") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise SchemaError(f"{csv_path}: duplicate column names in header")
        names = {s.name for s in specs}
        extra = [h for h in header if h not in names]
        if extra:
            raise SchemaError(f"{csv_path}: columns {extra} are not declared in the schema")
        cols = []
        for s in specs:
            if s.name in header:
                cols.append(header.index(s.name))
            elif s.name in optional:
                cols.append(None)
            else:
                raise SchemaError(f"{csv_path}: declared column {s.name!r} missing from header")
        rows = []
        for line_no, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise SchemaError(
                    f"{csv_path}: row {line_no} has {len(raw)} fields, header has {len(header)}")
            row = []
            for s, c in zip(specs, cols):
                if c is None:
                    row.append(None)
                    continue
                cell = raw[c].strip()
                if cell == "":
                    raise ParseError(f"{csv_path}: row {line_no}: missing value in column {s.name!r}",
                                     row=line_no)
                if s.is_continuous:
                    try:
                        x = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"{csv_path}: row {line_no}: column {s.name!r} expects a number, got {cell!r}",
                            row=line_no) from None
                    if not math.isfinite(x):
                        raise ParseError(f"{csv_path}: row {line_no}: non-finite value in {s.name!r}",
                                         row=line_no)
                    row.append(x)
                else:
                    if s.categories and cell not in s.categories:
                        raise SchemaError(
                            f"{csv_path}: row {line_no}: token {cell!r} not declared for column {s.name!r}")
                    row.append(cell)
            rows.append(row)
    return rows


def load_dataset(csv_path, schema) -> Dataset:
    """Load a CSV file (header row required) against a schema path or mapping."""
    specs, target = load_schema(schema)
    rows = _read_rows(csv_path, specs)
    if not rows:
        raise DataError(f"{csv_path}: no data rows")
    return Dataset(specs, rows, target)


def load_queries(csv_path, dataset: Dataset) -> list[list]:
    """Read query rows for an existing dataset; the target column may be omitted."""
    optional = [dataset.specs[dataset.target].name] if dataset.target is not None else []
    return _read_rows(csv_path, dataset.specs, optional=optional)


# --------------------------------------------------------------------------
# neighbor search


def knn_query(dataset: Dataset, query, k: int, metric, exclude: int | None = None) -> NeighborSet:
    """Exact k nearest cases under ``metric`` (a DistanceConfig), brute force.

    ``query`` is either a raw value row or an in-model case id. Ties are
    broken by ascending case id; asking for more neighbors than exist
    returns every available case.
    """
    from .distance import distances_to

    if dataset.n_cases == 0:
        raise DataError("cannot query an empty dataset")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if isinstance(query, (int, np.integer)):
        qid, q = int(query), dataset.X[int(query)]
    else:
        qid, q = None, dataset.encode_query(query)
    d = distances_to(dataset.X, q, metric)
    order = np.argsort(d, kind="stable")
    if exclude is not None:
        order = order[order != exclude]
    order = order[:k]
    return NeighborSet(qid, tuple((int(i), float(d[i])) for i in order), k)

"""Distribution encoders: uniform, independent, empirical, Markov, raw train.

Each encoder produces a train with boundary bonds 1 whose dense
materialization is the intended probability tensor.  Structure:

* independent products are bond-1 trains of the marginal vectors;
* an empirical dataset keeps one bond state per row (leftmost core
  spreads mass 1/m, middle cores are per-row selectors);
* a Markov chain keeps one bond state per symbol of the previous site.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError
from .train import DEFAULT_DENSE_CAP, TensorTrain, tt_to_dense
from . import serialize

NORMALIZATION_TOL = 1e-9
EXHAUSTIVE_CAP = 2 ** 16


def _check_probability_vector(vec: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(vec)):
        raise ValidationError(f"{what} has non-finite entries")
    if vec.min(initial=0.0) < 0:
        raise ValidationError(f"{what} has negative entries")
    total = float(vec.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"{what} sums to {total!r}, expected 1 within {NORMALIZATION_TOL}")


def independent_to_tt(marginals: Sequence[Sequence[float]]) -> TensorTrain:
    """Bond-1 train whose dense form is the product of the marginals."""
    if not marginals:
        raise ValidationError("need at least one marginal vector")
    cores = []
    for t, marginal in enumerate(marginals, start=1):
        vec = np.asarray(marginal, dtype=np.float64).reshape(-1)
        _check_probability_vector(vec, f"marginal at site {t}")
        cores.append(vec.reshape(1, -1, 1))
    return TensorTrain(cores)


def uniform_tt(dims: Sequence[int]) -> TensorTrain:
    return independent_to_tt([[1.0 / d] * d for d in dims])


def empirical_to_tt(dataset: Sequence[Sequence[int]], dims: Sequence[int] | None = None) -> TensorTrain:
    """Frequency distribution of a dataset of 1-based symbol rows.

    Bond states index dataset rows, so a duplicated row simply gets its
    mass counted twice; no deduplication is attempted.
    """
    rows = [tuple(int(v) for v in row) for row in dataset]
    if not rows:
        raise ValidationError("empirical dataset is empty")
    n = len(rows[0])
    if n == 0:
        raise ValidationError("empirical dataset has zero-length rows")
    if any(len(row) != n for row in rows):
        raise ValidationError("empirical dataset rows have inconsistent lengths")
    if dims is None:
        dims = [max(row[t] for row in rows) for t in range(n)]
    dims = [int(d) for d in dims]
    for r, row in enumerate(rows, start=1):
        for t, v in enumerate(row, start=1):
            if not 1 <= v <= dims[t - 1]:
                raise ValidationError(f"row {r} has symbol {v} out of range 1..{dims[t - 1]} at site {t}")
    m = len(rows)

    if n == 1:
        core = np.zeros((1, dims[0], 1))
        for row in rows:
            core[0, row[0] - 1, 0] += 1.0 / m
        return TensorTrain([core])

    first = np.zeros((1, dims[0], m))
    for r, row in enumerate(rows):
        first[0, row[0] - 1, r] = 1.0 / m
    cores = [first]
    for t in range(1, n - 1):
        middle = np.zeros((m, dims[t], m))
        for r, row in enumerate(rows):
            middle[r, row[t] - 1, r] = 1.0
        cores.append(middle)
    last = np.zeros((m, dims[n - 1], 1))
    for r, row in enumerate(rows):
        last[r, row[n - 1] - 1, 0] = 1.0
    cores.append(last)
    return TensorTrain(cores)


def markov_to_tt(
    initial: Sequence[float],
    transitions: Sequence[Sequence[Sequence[float]]],
    n: int,
) -> TensorTrain:
    """Chain-rule distribution of a (possibly time-varying) Markov chain."""
    init = np.asarray(initial, dtype=np.float64).reshape(-1)
    _check_probability_vector(init, "initial vector")
    n = int(n)
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    mats = [np.asarray(t, dtype=np.float64) for t in transitions]
    if len(mats) != n - 1:
        raise ValidationError(f"got {len(mats)} transition matrices for length {n} (need {n - 1})")
    size = init.size
    for step, mat in enumerate(mats, start=1):
        if mat.shape != (size, size):
            raise ValidationError(f"transition {step} has shape {mat.shape}, expected {(size, size)}")
        for row in range(size):
            _check_probability_vector(mat[row], f"transition {step} row {row + 1}")

    if n == 1:
        return TensorTrain([init.reshape(1, size, 1)])
    first = np.zeros((1, size, size))
    for v in range(size):
        first[0, v, v] = init[v]
    cores = [first]
    for step in range(1, n - 1):
        mid = np.zeros((size, size, size))
        for u in range(size):
            for v in range(size):
                mid[u, v, v] = mats[step - 1][u, v]
        cores.append(mid)
    cores.append(mats[n - 2].reshape(size, size, 1))
    return TensorTrain(cores)


@dataclass
class DistributionReport:
    """Result of ``validate_distribution``; informational, never raises."""

    mass: float
    min_entry: float | None
    checked_points: int


def validate_distribution(tt: TensorTrain, exhaustive: bool = False, cap: int = EXHAUSTIVE_CAP) -> DistributionReport:
    """Report total mass, and pointwise minimum when exhaustively checkable."""
    acc = tt.arrays[0].sum(axis=1)
    for t in range(1, len(tt)):
        acc = acc @ tt.arrays[t].sum(axis=1)
    mass = float(acc.reshape(-1)[0])
    min_entry = None
    checked = 0
    domain = math.prod(tt.physical_dims)
    if exhaustive and domain <= cap:
        dense = tt_to_dense(tt, cap=cap)
        min_entry = float(dense.array.min())
        checked = dense.size
    return DistributionReport(mass=mass, min_entry=min_entry, checked_points=checked)


@dataclass
class DistributionSpec:
    """Declarative distribution description, loadable from JSON."""

    kind: str
    payload: dict[str, Any]

    KINDS = ("uniform", "independent", "empirical", "markov", "tt")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def from_json(cls, data: dict[str, Any] | str) -> "DistributionSpec":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict) or "kind" not in data:
            raise ValidationError("distribution spec must be an object with a 'kind' field")
        kind = data["kind"]
        payload = {k: v for k, v in data.items() if k != "kind"}
        return cls(kind=kind, payload=payload)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.payload}

    def compile(self, cap: int = DEFAULT_DENSE_CAP) -> TensorTrain:
        if self.kind == "uniform":
            return uniform_tt(self.payload["dims"])
        if self.kind == "independent":
            return independent_to_tt(self.payload["marginals"])
        if self.kind == "empirical":
            return empirical_to_tt(self.payload["rows"], self.payload.get("dims"))
        if self.kind == "markov":
            transitions = self.payload["transitions"]
            n = int(self.payload.get("n", len(transitions) + 1))
            return markov_to_tt(self.payload["initial"], transitions, n)
        return serialize.tt_from_json(self.payload["tt"])

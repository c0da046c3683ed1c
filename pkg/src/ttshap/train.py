"""Tensor-train representation, evaluation, materialization, and scans.

A train is an ordered chain of order-3 cores ``(left_bond, physical,
right_bond)`` with matching bonds between neighbours.  Boundary bonds may
exceed 1: the left boundary can carry a feature-index leg and the right
boundary an output leg, so both flow through evaluation uniformly.

``scan_product`` evaluates an ordered matrix chain either sequentially or
by a balanced reduction tree.  The tree pairs neighbours ``(1,2), (3,4),
...`` level by level, promoting an odd leftover unchanged, so the
association tree is fixed and results are bit-identical regardless of how
many worker threads execute a level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AxisRangeError, ResourceLimitError, ShapeMismatchError, ValidationError
from .tensor import DenseTensor

DEFAULT_DENSE_CAP = 2 ** 20


class TensorTrain:
    """Chain of order-3 cores with matching bond dimensions."""

    __slots__ = ("_cores",)

    def __init__(self, cores: Sequence[DenseTensor | np.ndarray]):
        if not cores:
            raise ValidationError("a tensor train needs at least one core")
        normalized: list[DenseTensor] = []
        for t, core in enumerate(cores, start=1):
            if isinstance(core, np.ndarray):
                core = DenseTensor.from_array(core)
            if core.order != 3:
                raise ShapeMismatchError(
                    f"core {t} has order {core.order}, expected 3 (left, physical, right)"
                )
            normalized.append(core)
        for t in range(len(normalized) - 1):
            right = normalized[t].shape[2]
            left = normalized[t + 1].shape[0]
            if right != left:
                raise ShapeMismatchError(
                    f"bond mismatch between cores {t + 1} and {t + 2}: {right} != {left}"
                )
        self._cores = tuple(normalized)

    @property
    def cores(self) -> tuple[DenseTensor, ...]:
        return self._cores

    @property
    def arrays(self) -> list[np.ndarray]:
        return [c.array for c in self._cores]

    @property
    def left_boundary(self) -> int:
        return self._cores[0].shape[0]

    @property
    def right_boundary(self) -> int:
        return self._cores[-1].shape[2]

    @property
    def physical_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self._cores)

    def __len__(self) -> int:
        return len(self._cores)

    def __repr__(self) -> str:
        bonds = [self.left_boundary] + [c.shape[2] for c in self._cores]
        return f"TensorTrain(sites={len(self)}, physical={list(self.physical_dims)}, bonds={bonds})"


def tt_eval(tt: TensorTrain, x: Sequence[int]) -> DenseTensor:
    """Product of the core slices picked by ``x``; a left-by-right boundary matrix.

    ``x`` holds 1-based symbols, one per site.
    """
    if len(x) != len(tt):
        raise ShapeMismatchError(f"instance has {len(x)} symbols for {len(tt)} sites")
    dims = tt.physical_dims
    for t, (symbol, dim) in enumerate(zip(x, dims), start=1):
        if not 1 <= symbol <= dim:
            raise AxisRangeError(f"symbol {symbol} out of range 1..{dim} at site {t}")
    result = tt.arrays[0][:, x[0] - 1, :]
    for t in range(1, len(tt)):
        result = result @ tt.arrays[t][:, x[t] - 1, :]
    return DenseTensor.from_array(result)


def tt_to_dense(tt: TensorTrain, cap: int = DEFAULT_DENSE_CAP) -> DenseTensor:
    """Materialize the full tensor.

    The result keeps the physical axes in site order; boundary axes are
    kept only when their dimension exceeds 1.
    """
    total = tt.left_boundary * math.prod(tt.physical_dims) * tt.right_boundary
    if total > cap:
        raise ResourceLimitError(f"dense materialization needs {total} entries, cap is {cap}")
    left = tt.left_boundary
    acc = tt.arrays[0].reshape(left * tt.physical_dims[0], -1)
    for t in range(1, len(tt)):
        core = tt.arrays[t]
        bond, phys, right = core.shape
        acc = acc @ core.reshape(bond, phys * right)
        acc = acc.reshape(-1, right)
    shape = [left] + list(tt.physical_dims) + [tt.right_boundary]
    full = acc.reshape(shape)
    if tt.right_boundary == 1:
        full = full.reshape(shape[:-1])
    if left == 1:
        full = full.reshape(full.shape[1:])
    return DenseTensor.from_array(full)


@dataclass
class ScanStats:
    """Instrumentation filled in by ``scan_product``."""

    levels: int = 0
    products: int = 0
    level_sizes: list[int] = field(default_factory=list)


def _check_chain(mats: Sequence[DenseTensor]) -> list[np.ndarray]:
    if not mats:
        raise ValidationError("scan_product needs at least one matrix")
    arrays = []
    for t, m in enumerate(mats, start=1):
        if m.order != 2:
            raise ShapeMismatchError(f"matrix {t} has order {m.order}, expected 2")
        arrays.append(m.array)
    for t in range(len(arrays) - 1):
        if arrays[t].shape[1] != arrays[t + 1].shape[0]:
            raise ShapeMismatchError(
                f"dimension mismatch at boundary between matrices {t + 1} and {t + 2}: "
                f"{arrays[t].shape[1]} != {arrays[t + 1].shape[0]}"
            )
    return arrays


def scan_product(
    mats: Sequence[DenseTensor],
    schedule: str = "sequential",
    threads: int = 1,
    stats: ScanStats | None = None,
) -> DenseTensor:
    """Ordered product ``m_1 @ m_2 @ ... @ m_k`` under the chosen schedule.

    ``sequential`` folds left to right; ``tree`` reduces neighbour pairs
    level by level (ceil(log2 k) levels).  Both return the same product up
    to floating-point association, and the tree result is deterministic
    for any thread count because the pairing is fixed.
    """
    arrays = _check_chain(mats)
    if schedule not in ("sequential", "tree"):
        raise ValidationError(f"unknown schedule {schedule!r}, expected 'sequential' or 'tree'")
    if threads < 1:
        raise ValidationError(f"threads must be >= 1, got {threads}")

    if schedule == "sequential":
        acc = arrays[0]
        for t in range(1, len(arrays)):
            acc = acc @ arrays[t]
            if stats is not None:
                stats.levels += 1
                stats.products += 1
        return DenseTensor.from_array(acc)

    level = arrays
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while len(level) > 1:
            pairs = [(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
            leftover = [level[-1]] if len(level) % 2 else []
            if pool is not None:
                products = list(pool.map(lambda p: p[0] @ p[1], pairs))
            else:
                products = [a @ b for a, b in pairs]
            level = products + leftover
            if stats is not None:
                stats.levels += 1
                stats.products += len(pairs)
                stats.level_sizes.append(len(level))
    finally:
        if pool is not None:
            pool.shutdown()
    return DenseTensor.from_array(level[0])

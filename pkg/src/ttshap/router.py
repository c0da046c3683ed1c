"""Value routing between instance and distribution, plus the brute-force
marginal value function used by every oracle.

A router is the 0/1 tensor that implements per-feature intervention:
depending on the coalition switch it feeds the model either the value
from the instance being explained or the value sampled from the data
distribution.  Axis order is ``(value_from_x, switch, value_from_dist,
value_to_model)``; switch 2 keeps the instance value, switch 1 routes the
distribution sample (the same convention as the signed weight tensor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .tensor import DenseTensor
from .train import DEFAULT_DENSE_CAP, TensorTrain, tt_to_dense

ModelEval = Callable[[Sequence[int]], np.ndarray]


@dataclass
class RouterTensor:
    """0/1 selector of shape ``(N, 2, N, N)`` with exactly ``2 N^2`` ones."""

    alphabet_size: int
    tensor: DenseTensor


def router_tensor(alphabet_size: int) -> RouterTensor:
    if alphabet_size < 1:
        raise ValidationError(f"alphabet size must be >= 1, got {alphabet_size}")
    n = alphabet_size
    out = np.zeros((n, 2, n, n), dtype=np.float64)
    for sx in range(n):
        for sp in range(n):
            out[sx, 1, sp, sx] = 1.0  # switch 2: keep the instance value
            out[sx, 0, sp, sp] = 1.0  # switch 1: take the distribution sample
    return RouterTensor(alphabet_size=n, tensor=DenseTensor.from_array(out))


class EnumerableDistribution:
    """A distribution given by an explicit list of support points.

    ``points`` holds 1-based symbol rows; ``probs`` the matching masses.
    This is the substrate of the brute-force value function: cheap to
    enumerate, independent of any train contraction.
    """

    __slots__ = ("dims", "points", "probs")

    def __init__(self, dims: Sequence[int], points: np.ndarray, probs: np.ndarray):
        self.dims = tuple(int(d) for d in dims)
        self.points = np.asarray(points, dtype=np.int64).reshape(-1, len(self.dims))
        self.probs = np.asarray(probs, dtype=np.float64).reshape(-1)
        if self.points.shape[0] != self.probs.shape[0]:
            raise ValidationError(
                f"{self.points.shape[0]} support points but {self.probs.shape[0]} masses"
            )
        for axis, dim in enumerate(self.dims):
            column = self.points[:, axis]
            if column.min(initial=1) < 1 or column.max(initial=1) > dim:
                raise ValidationError(f"support symbol out of range 1..{dim} at site {axis + 1}")

    @classmethod
    def from_dense(cls, tensor: DenseTensor, cap: int = DEFAULT_DENSE_CAP) -> "EnumerableDistribution":
        if tensor.size > cap:
            raise ResourceLimitError(f"enumerating {tensor.size} points exceeds cap {cap}")
        dims = tensor.shape
        grids = np.indices(dims).reshape(len(dims), -1).T + 1
        return cls(dims, grids, tensor.array.reshape(-1))

    @classmethod
    def from_train(cls, tt: TensorTrain, cap: int = DEFAULT_DENSE_CAP) -> "EnumerableDistribution":
        return cls.from_dense(tt_to_dense(tt, cap=cap), cap=cap)

    @classmethod
    def uniform(cls, dims: Sequence[int], cap: int = DEFAULT_DENSE_CAP) -> "EnumerableDistribution":
        total = math.prod(dims)
        if total > cap:
            raise ResourceLimitError(f"enumerating {total} points exceeds cap {cap}")
        grids = np.indices(tuple(dims)).reshape(len(dims), -1).T + 1
        return cls(dims, grids, np.full(total, 1.0 / total))

    @property
    def n_sites(self) -> int:
        return len(self.dims)


def marginal_value(
    model_eval: ModelEval,
    dist: EnumerableDistribution,
    x: Sequence[int],
    switches: Sequence[int],
) -> np.ndarray:
    """Expected model output with coalition features pinned to ``x``.

    Every support point of ``dist`` is mixed with ``x`` according to
    ``switches`` (2 keeps the instance value, 1 takes the sampled value)
    and fed to ``model_eval``; the results are probability-averaged.
    """
    n = dist.n_sites
    if len(x) != n or len(switches) != n:
        raise ValidationError(
            f"instance/switch length mismatch: {len(x)}, {len(switches)} vs {n} sites"
        )
    if any(s not in (1, 2) for s in switches):
        raise ValidationError(f"switch entries must be 1 or 2, got {list(switches)}")
    keep = np.asarray([s == 2 for s in switches], dtype=bool)
    x_row = np.asarray(x, dtype=np.int64)
    total: np.ndarray | None = None
    for point, prob in zip(dist.points, dist.probs):
        mixed = np.where(keep, x_row, point)
        value = prob * np.asarray(model_eval(tuple(int(v) for v in mixed)), dtype=np.float64).reshape(-1)
        total = value if total is None else total + value
    assert total is not None
    return total

"""Dense tensor type and the three kernel operations everything builds on.

Conventions fixed here and relied on everywhere else:

* values are stored flat in row-major order (C order);
* axes are numbered 1-based, so a contraction pair ``(3, 1)`` joins the
  third axis of the left operand with the first axis of the right one;
* all arithmetic is float64;
* an order-0 tensor is a single scalar (empty shape, one value).

Tensors are immutable after construction and safe to share across
threads.  ``contract`` runs as axis permutation + reshape + one matrix
product; ``contract_naive`` is the loop reference kept for tests.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import AxisRangeError, ShapeMismatchError, ValidationError

Pair = tuple[int, int]


class DenseTensor:
    """Arbitrary-order real tensor: a shape plus flat row-major values."""

    __slots__ = ("_array",)

    def __init__(self, shape: Sequence[int], values: Sequence[float]):
        shape = tuple(int(d) for d in shape)
        if any(d < 1 for d in shape):
            raise ValidationError(f"shape entries must be >= 1, got {shape}")
        expected = math.prod(shape)
        array = np.asarray(values, dtype=np.float64).reshape(-1)
        if array.size != expected:
            raise ShapeMismatchError(
                f"got {array.size} values for shape {shape} (expected {expected})"
            )
        array = array.reshape(shape)
        array.flags.writeable = False
        self._array = array

    @classmethod
    def from_array(cls, array: np.ndarray) -> "DenseTensor":
        """Wrap (and freeze) an ndarray without flattening; copies only when
        the input is not already float64 C-contiguous."""
        out = cls.__new__(cls)
        arr = np.asarray(array, dtype=np.float64)
        if not arr.flags.c_contiguous:
            arr = arr.copy(order="C")  # keeps 0-d shape, unlike ascontiguousarray
        arr.flags.writeable = False
        out._array = arr
        return out

    @classmethod
    def scalar(cls, value: float) -> "DenseTensor":
        return cls((), [float(value)])

    @property
    def array(self) -> np.ndarray:
        """Read-only numpy view of the tensor."""
        return self._array

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def order(self) -> int:
        return self._array.ndim

    @property
    def size(self) -> int:
        return self._array.size

    @property
    def values(self) -> list[float]:
        """Flat row-major payload."""
        return self._array.reshape(-1).tolist()

    def item(self) -> float:
        if self._array.size != 1:
            raise ValidationError(f"item() needs a single-entry tensor, shape is {self.shape}")
        return float(self._array.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"DenseTensor(shape={list(self.shape)})"


def _check_pairs(a: DenseTensor, b: DenseTensor, pairs: Iterable[Pair]) -> list[Pair]:
    seen_a: set[int] = set()
    seen_b: set[int] = set()
    checked: list[Pair] = []
    for pair in pairs:
        i, j = pair
        if not 1 <= i <= a.order:
            raise AxisRangeError(f"axis {i} out of range for order-{a.order} left operand")
        if not 1 <= j <= b.order:
            raise AxisRangeError(f"axis {j} out of range for order-{b.order} right operand")
        if i in seen_a or j in seen_b:
            raise ValidationError(f"axis repeated in contraction pairs at {pair}")
        seen_a.add(i)
        seen_b.add(j)
        if a.shape[i - 1] != b.shape[j - 1]:
            raise ShapeMismatchError(
                f"contraction pair ({i},{j}): dimension {a.shape[i - 1]} != {b.shape[j - 1]}"
            )
        checked.append((i, j))
    return checked


def contract(a: DenseTensor, b: DenseTensor, pairs: Iterable[Pair]) -> DenseTensor:
    """Sum over the paired axes; surviving axes of ``a`` precede those of ``b``.

    ``pairs`` is a set of 1-based ``(axis_of_a, axis_of_b)`` pairs.  The
    result does not depend on the order the pairs are given in.
    """
    checked = sorted(_check_pairs(a, b, pairs))
    axes_a = [i - 1 for i, _ in checked]
    axes_b = [j - 1 for _, j in checked]
    keep_a = [i for i in range(a.order) if i not in set(axes_a)]
    keep_b = [j for j in range(b.order) if j not in set(axes_b)]

    inner = math.prod(a.shape[i] for i in axes_a)
    left = a.array.transpose(keep_a + axes_a).reshape(-1, inner)
    right = b.array.transpose(axes_b + keep_b).reshape(inner, -1)
    out = left @ right
    out_shape = tuple(a.shape[i] for i in keep_a) + tuple(b.shape[j] for j in keep_b)
    return DenseTensor.from_array(out.reshape(out_shape))


def contract_naive(a: DenseTensor, b: DenseTensor, pairs: Iterable[Pair]) -> DenseTensor:
    """Loop reference implementation of ``contract`` (tests only)."""
    checked = sorted(_check_pairs(a, b, pairs))
    axes_a = [i - 1 for i, _ in checked]
    axes_b = [j - 1 for _, j in checked]
    keep_a = [i for i in range(a.order) if i not in set(axes_a)]
    keep_b = [j for j in range(b.order) if j not in set(axes_b)]
    out_shape = tuple(a.shape[i] for i in keep_a) + tuple(b.shape[j] for j in keep_b)
    inner_dims = [a.shape[i] for i in axes_a]

    out = np.zeros(out_shape, dtype=np.float64)
    for out_idx in itertools.product(*(range(d) for d in out_shape)):
        ka = out_idx[: len(keep_a)]
        kb = out_idx[len(keep_a):]
        total = 0.0
        for summed in itertools.product(*(range(d) for d in inner_dims)):
            ia = [0] * a.order
            ib = [0] * b.order
            for pos, axis in enumerate(keep_a):
                ia[axis] = ka[pos]
            for pos, axis in enumerate(keep_b):
                ib[axis] = kb[pos]
            for pos, (ax_a, ax_b) in enumerate(zip(axes_a, axes_b)):
                ia[ax_a] = summed[pos]
                ib[ax_b] = summed[pos]
            total += a.array[tuple(ia)] * b.array[tuple(ib)]
        out[out_idx] = total
    return DenseTensor.from_array(out)


def outer(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Outer product; result shape is the concatenation of both shapes."""
    out = np.multiply.outer(a.array, b.array)
    return DenseTensor.from_array(out.reshape(a.shape + b.shape))


def reshape(a: DenseTensor, groups: Sequence[int]) -> DenseTensor:
    """Merge consecutive axes; ``groups`` lists how many axes go in each new one.

    The flat row-major values are untouched, only the shape changes.
    """
    groups = [int(g) for g in groups]
    if any(g < 1 for g in groups):
        raise ValidationError(f"group sizes must be >= 1, got {groups}")
    if sum(groups) != a.order:
        raise ShapeMismatchError(
            f"groups {groups} sum to {sum(groups)} but tensor has order {a.order}"
        )
    new_shape = []
    pos = 0
    for g in groups:
        new_shape.append(math.prod(a.shape[pos:pos + g]))
        pos += g
    return DenseTensor.from_array(a.array.reshape(new_shape))


def one_hot(i: int, n: int) -> DenseTensor:
    """Length-``n`` vector with a single 1 at 1-based position ``i``."""
    if not 1 <= i <= n:
        raise AxisRangeError(f"one-hot index {i} out of range 1..{n}")
    v = np.zeros(n, dtype=np.float64)
    v[i - 1] = 1.0
    return DenseTensor.from_array(v)

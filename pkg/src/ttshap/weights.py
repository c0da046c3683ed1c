"""Signed coalition-weight tensor and its tensor-train factorization.

The coalition convention used across the whole package: a switch vector
``s`` over ``{1, 2}`` marks feature ``j`` as *in* the coalition (kept at
its instance value) when ``s_j == 2`` and as resampled from the
distribution when ``s_j == 1``.

For a target feature ``i`` the signed coefficient of a switch vector is
``+W(S)`` when ``s_i == 2`` and ``-W(S)`` when ``s_i == 1``, where ``S``
is the coalition *excluding* ``i`` and ``W(S) = |S|! (n-|S|-1)! / n!``.

The train factorization runs a left-to-right state machine over bond
states ``(i, k)``: ``i`` remembers which feature is being attributed and
``k`` counts coalition members seen so far, excluding ``i`` itself.  Site
``j`` multiplies the running amplitude by

* ``(-1)^[j==i] / j``            when ``s_j == 1`` (keep ``k``),
* ``1 / j``                      when ``s_j == 2`` and ``j == i`` (keep ``k``),
* ``(k+1) / (j (n-k-1))``        when ``s_j == 2`` and ``j != i`` (bump ``k``),

seeded with ``(n-1)!`` on the left.  The bump factor is only written for
``k <= n-2`` (a larger ``k`` cannot gain another member besides ``i``),
which keeps every stored entry finite.  For ``n > 20`` the factorial seed
is spread across sites in log space as ``((n-1)!)^(1/n) / j`` so no core
entry overflows even though the seed itself would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .tensor import DenseTensor
from .train import TensorTrain

DENSE_WEIGHT_CAP = 12
_PLAIN_FACTORIAL_LIMIT = 20


def shapley_weight(subset_size: int, n: int) -> float:
    """``|S|! (n-|S|-1)! / n!`` for a coalition of ``subset_size`` others."""
    if not 0 <= subset_size <= n - 1:
        raise ValidationError(f"subset size {subset_size} out of range 0..{n - 1}")
    return (
        math.factorial(subset_size)
        * math.factorial(n - subset_size - 1)
        / math.factorial(n)
    )


def signed_coefficient(s_tilde: Sequence[int], i: int, n: int) -> float:
    """Signed Shapley weight of switch vector ``s_tilde`` for feature ``i``."""
    if len(s_tilde) != n:
        raise ValidationError(f"switch vector has length {len(s_tilde)}, expected {n}")
    if any(s not in (1, 2) for s in s_tilde):
        raise ValidationError(f"switch entries must be 1 or 2, got {list(s_tilde)}")
    if not 1 <= i <= n:
        raise ValidationError(f"feature index {i} out of range 1..{n}")
    others_in = sum(1 for j, s in enumerate(s_tilde, start=1) if j != i and s == 2)
    weight = shapley_weight(others_in, n)
    return weight if s_tilde[i - 1] == 2 else -weight


def weight_tensor_dense(n: int, cap: int = DENSE_WEIGHT_CAP) -> DenseTensor:
    """Full ``n x 2^n`` signed weight tensor; the oracle the train must match."""
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    if n > cap:
        raise ResourceLimitError(f"dense weight tensor for n={n} exceeds cap {cap}")
    out = np.zeros((n,) + (2,) * n, dtype=np.float64)
    for i in range(1, n + 1):
        for flat in range(2 ** n):
            bits = [(flat >> (n - 1 - j)) & 1 for j in range(n)]
            s_tilde = [b + 1 for b in bits]
            out[(i - 1,) + tuple(bits)] = signed_coefficient(s_tilde, i, n)
    return DenseTensor.from_array(out)


@dataclass
class WeightCoreSet:
    """Train form of the signed weight tensor for ``n`` features.

    ``cores`` has left boundary ``n`` (the feature leg), physical
    dimension 2 everywhere, internal bonds ``n**2``, right boundary 1.
    """

    n: int
    cores: TensorTrain


def _site_scale(n: int, j: int) -> float:
    if n <= _PLAIN_FACTORIAL_LIMIT:
        seed = float(math.factorial(n - 1)) if j == 1 else 1.0
        return seed / j
    return math.exp(math.lgamma(n) / n) / j


def weight_core_entries(n: int, site: int):
    """Yield the nonzero entries of one weight core as
    ``(left_index, switch_index, right_index, factor)`` tuples.

    Every stored value of the dense core appears here (the rest are
    zeros), so finiteness of the stream is finiteness of the core; at
    large ``n`` this avoids materializing ``2 n^4`` dense entries.
    """
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    if not 1 <= site <= n:
        raise ValidationError(f"site {site} out of range 1..{n}")

    def idx(i: int, k: int) -> int:
        return (i - 1) * n + k

    scale = _site_scale(n, site)
    j = site
    if n == 1:
        yield (0, 0, 0, -scale)
        yield (0, 1, 0, scale)
        return

    if site == 1:
        for i in range(1, n + 1):
            sign = -1.0 if i == 1 else 1.0
            yield (i - 1, 0, idx(i, 0), sign * scale)
            if i == 1:
                yield (i - 1, 1, idx(1, 0), scale)
            else:
                yield (i - 1, 1, idx(i, 1), scale / (n - 1))
        return

    last = site == n
    for i in range(1, n + 1):
        for k in range(n):
            source = idx(i, k)
            sign = -1.0 if j == i else 1.0
            yield (source, 0, 0 if last else idx(i, k), sign * scale)
            if j == i:
                yield (source, 1, 0 if last else idx(i, k), scale)
            elif k <= n - 2:
                yield (source, 1, 0 if last else idx(i, k + 1), scale * (k + 1) / (n - k - 1))


def weight_core_site(n: int, site: int) -> DenseTensor:
    """Build the single core at 1-based ``site`` of the weight train.

    Cores are independent, so callers can build and drop them one at a
    time (one core holds ``2 n^4`` numbers).
    """
    if n == 1:
        shape = (1, 2, 1)
    elif site == 1:
        shape = (n, 2, n * n)
    elif site == n:
        shape = (n * n, 2, 1)
    else:
        shape = (n * n, 2, n * n)
    core = np.zeros(shape, dtype=np.float64)
    for left, switch, right, factor in weight_core_entries(n, site):
        core[left, switch, right] = factor
    return DenseTensor.from_array(core)


def weight_cores(n: int) -> WeightCoreSet:
    """Assemble the full weight train (one ``O(n^4)``-entry core per site)."""
    cores = [weight_core_site(n, site) for site in range(1, n + 1)]
    return WeightCoreSet(n=n, cores=TensorTrain(cores))

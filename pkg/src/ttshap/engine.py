"""Exact marginal SHAP for tensor-train models under tensor-train
distributions, plus the independent brute-force oracle and a dense path
for small arbitrary tensors.

The train engine assembles one matrix per site by contracting the value
router with the model core, the distribution core, the coalition-weight
core, and the instance one-hot, then multiplies the site matrices with
either schedule of ``scan_product``.  The first site carries the
feature-index leg on the left and the last site the model-output leg on
the right, so the chain product is already the attribution matrix.

Site matrices flatten their three bond legs in (weight, distribution,
model) order; that ordering is fixed here and never exposed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AxisRangeError, ResourceLimitError, ShapeMismatchError, ValidationError
from .router import EnumerableDistribution, ModelEval, RouterTensor, router_tensor
from .tensor import DenseTensor, contract, one_hot
from .train import ScanStats, TensorTrain, scan_product, tt_eval
from .weights import shapley_weight, weight_core_site, weight_tensor_dense

ORACLE_FEATURE_CAP = 20
GENERAL_DENSE_CAP = 2 ** 16
MASS_TOLERANCE = 1e-9


@dataclass
class ShapMatrix:
    """Per-feature, per-output attribution values."""

    values: np.ndarray
    feature_names: list[str] | None = None
    output_names: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError(f"attribution values must be 2-D, got {self.values.shape}")

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.values.shape[1]


@dataclass
class SiteCore:
    """One assembled site matrix of the attribution chain."""

    site: int
    matrix: DenseTensor
    row_dims: tuple[int, int, int]
    col_dims: tuple[int, int, int]


def _check_pair(model: TensorTrain, dist: TensorTrain) -> None:
    if len(model) != len(dist):
        raise ShapeMismatchError(
            f"model has {len(model)} sites but distribution has {len(dist)}"
        )
    for t, (m, d) in enumerate(zip(model.physical_dims, dist.physical_dims), start=1):
        if m != d:
            raise ShapeMismatchError(
                f"physical dimension mismatch at site {t}: model {m} != distribution {d}"
            )
    if dist.left_boundary != 1 or dist.right_boundary != 1:
        raise ValidationError(
            f"distribution boundaries must be 1, got {dist.left_boundary} and {dist.right_boundary}"
        )
    if model.left_boundary != 1:
        raise ValidationError(f"model left boundary must be 1, got {model.left_boundary}")


def assemble_site_cores(
    model: TensorTrain, dist: TensorTrain, x: Sequence[int]
) -> list[SiteCore]:
    """Contract router, model, distribution, and weight cores at each site.

    Returns one matrix per site with row/column legs flattened in
    (weight, distribution, model) bond order.
    """
    _check_pair(model, dist)
    n = len(model)
    if len(x) != n:
        raise ShapeMismatchError(f"instance has {len(x)} symbols for {n} sites")
    for t, (symbol, dim) in enumerate(zip(x, model.physical_dims), start=1):
        if not 1 <= symbol <= dim:
            raise AxisRangeError(f"symbol {symbol} out of range 1..{dim} at site {t}")
    routers: dict[int, RouterTensor] = {}
    cores: list[SiteCore] = []
    for t in range(1, n + 1):
        alphabet = model.physical_dims[t - 1]
        router = routers.setdefault(alphabet, router_tensor(alphabet))
        weight_core = weight_core_site(n, t)
        # (x-value, switch, sample, to-model) x model -> (x, switch, sample, mL, mR)
        acc = contract(router.tensor, model.cores[t - 1], {(4, 2)})
        # -> (x, switch, mL, mR, pL, pR)
        acc = contract(acc, dist.cores[t - 1], {(3, 2)})
        # -> (x, mL, mR, pL, pR, wL, wR)
        acc = contract(acc, weight_core, {(2, 2)})
        # -> (mL, mR, pL, pR, wL, wR)
        acc = contract(acc, one_hot(x[t - 1], alphabet), {(1, 1)})
        arr = acc.array.transpose(4, 2, 0, 5, 3, 1)  # (wL, pL, mL, wR, pR, mR)
        row_dims = arr.shape[:3]
        col_dims = arr.shape[3:]
        matrix = DenseTensor.from_array(arr.reshape(math.prod(row_dims), math.prod(col_dims)))
        cores.append(SiteCore(site=t, matrix=matrix, row_dims=row_dims, col_dims=col_dims))
    return cores


def distribution_mass(dist: TensorTrain) -> float:
    """Total mass by contracting every physical leg with the ones vector."""
    acc = dist.arrays[0].sum(axis=1)
    for t in range(1, len(dist)):
        acc = acc @ dist.arrays[t].sum(axis=1)
    return float(acc.reshape(-1)[0])


def expected_value(model: TensorTrain, dist: TensorTrain) -> np.ndarray:
    """Expectation of the model output under the distribution.

    Contracts the two trains site by site over their shared physical
    legs, so the cost is polynomial in the bond dimensions.
    """
    _check_pair(model, dist)
    acc: np.ndarray | None = None
    for p_core, m_core in zip(dist.arrays, model.arrays):
        transfer = np.einsum("asb,csd->acbd", p_core, m_core)
        transfer = transfer.reshape(
            p_core.shape[0] * m_core.shape[0], p_core.shape[2] * m_core.shape[2]
        )
        acc = transfer if acc is None else acc @ transfer
    assert acc is not None
    return acc.reshape(-1)


def shap_tt(
    model: TensorTrain,
    dist: TensorTrain,
    x: Sequence[int],
    schedule: str = "sequential",
    threads: int = 1,
    stats: ScanStats | None = None,
    feature_names: list[str] | None = None,
    output_names: list[str] | None = None,
) -> ShapMatrix:
    """Attribution matrix for instance ``x``: features by model outputs.

    Raises ``ValidationError`` if the distribution mass is not 1 within
    ``1e-9`` (the message carries the measured mass).  Schedule choice
    changes only the association order of the site-matrix product.
    """
    _check_pair(model, dist)
    mass = distribution_mass(dist)
    if abs(mass - 1.0) > MASS_TOLERANCE:
        raise ValidationError(f"distribution mass is {mass!r}, expected 1 within {MASS_TOLERANCE}")
    site_cores = assemble_site_cores(model, dist, x)
    product = scan_product(
        [c.matrix for c in site_cores], schedule=schedule, threads=threads, stats=stats
    )
    return ShapMatrix(product.array, feature_names=feature_names, output_names=output_names)


def efficiency_residual(phi: ShapMatrix, model: TensorTrain, dist: TensorTrain, x: Sequence[int]) -> float:
    """Max deviation of per-output attribution sums from model(x) - E[model]."""
    lhs = phi.values.sum(axis=0)
    rhs = tt_eval(model, x).array.reshape(-1) - expected_value(model, dist)
    return float(np.max(np.abs(lhs - rhs)))


def _domain_table(model_eval: ModelEval, dims: Sequence[int], n_out: int) -> np.ndarray:
    table = np.empty((math.prod(dims), n_out), dtype=np.float64)
    for flat, point in enumerate(itertools.product(*(range(1, d + 1) for d in dims))):
        table[flat] = np.asarray(model_eval(point), dtype=np.float64).reshape(-1)
    return table


def coalition_values(
    model_eval: ModelEval, dist: EnumerableDistribution, x: Sequence[int]
) -> np.ndarray:
    """Marginal value of every coalition pattern, by direct enumeration.

    Row ``p`` of the result is the expected model output when the
    features whose bit is set in ``p`` (bit ``j`` is feature ``j+1``)
    keep their instance value and the rest are resampled.  Evaluation is
    tabulated over the full domain once, then each pattern is a
    probability-weighted gather: the same sum ``marginal_value`` computes
    point by point.
    """
    dims = dist.dims
    n = dist.n_sites
    domain = math.prod(dims)
    if domain > 2 ** 20:
        raise ResourceLimitError(f"coalition-value table needs {domain} model evaluations")
    probe = np.asarray(model_eval(tuple(x)), dtype=np.float64).reshape(-1)
    n_out = probe.size
    table = _domain_table(model_eval, dims, n_out)
    flat_weights = np.asarray([math.prod(dims[j + 1:]) for j in range(n)], dtype=np.int64)
    x_row = np.asarray(x, dtype=np.int64)
    points = dist.points
    values = np.empty((2 ** n, n_out), dtype=np.float64)
    for pattern in range(2 ** n):
        keep = np.asarray([(pattern >> j) & 1 for j in range(n)], dtype=bool)
        mixed = np.where(keep, x_row, points)
        flat = (mixed - 1) @ flat_weights
        values[pattern] = dist.probs @ table[flat]
    return values


def shap_dense_oracle(
    model_eval: ModelEval,
    dist: EnumerableDistribution,
    x: Sequence[int],
    feature_cap: int = ORACLE_FEATURE_CAP,
) -> ShapMatrix:
    """Attribution by direct summation over all coalitions.

    This path never touches the train engine: it enumerates the
    ``2^n`` coalitions, averages the model over the distribution support
    for each one, and combines them with the factorial weights.
    """
    n = dist.n_sites
    if n > feature_cap:
        raise ResourceLimitError(f"oracle coalition sum needs 2^{n} terms, cap is 2^{feature_cap}")
    if len(x) != n:
        raise ValidationError(f"instance has {len(x)} symbols for {n} sites")
    values = coalition_values(model_eval, dist, x)
    weights = np.asarray([shapley_weight(k, n) for k in range(n)])
    sizes = np.asarray([bin(p).count("1") for p in range(2 ** n)])
    phi = np.empty((n, values.shape[1]), dtype=np.float64)
    for j in range(n):
        member = (np.arange(2 ** n) >> j) & 1
        coeff = np.where(member, weights[sizes - 1], -weights[np.minimum(sizes, n - 1)])
        signed = coeff[:, None] * values
        # correctly-rounded accumulation: the reference stays independent of
        # the coalition enumeration order
        for o in range(values.shape[1]):
            phi[j, o] = math.fsum(signed[:, o])
    return ShapMatrix(phi)


def _with_output_axis(model_tensor: DenseTensor, n: int) -> np.ndarray:
    if model_tensor.order == n:
        return model_tensor.array.reshape(model_tensor.shape + (1,))
    if model_tensor.order == n + 1:
        return model_tensor.array
    raise ShapeMismatchError(
        f"model tensor of order {model_tensor.order} does not fit {n} features"
    )


def _coalition_value_dense(
    model: np.ndarray, dist: np.ndarray, x: Sequence[int], keep: Sequence[bool]
) -> np.ndarray:
    """Expectation with kept axes pinned to ``x`` and the rest summed against
    the marginalized distribution (the dense form of the router wiring)."""
    n = dist.ndim
    kept_axes = [j for j in range(n) if keep[j]]
    marg = dist.sum(axis=tuple(kept_axes)) if kept_axes else dist
    index = tuple(x[j] - 1 if keep[j] else slice(None) for j in range(n))
    sliced = model[index + (slice(None),)]
    if marg.ndim == 0:
        return sliced * float(marg)
    return np.tensordot(marg, sliced, axes=(list(range(marg.ndim)), list(range(marg.ndim))))


def marginal_value_tensor_dense(model_tensor: DenseTensor, dist_tensor: DenseTensor) -> DenseTensor:
    """Full value tensor over (domain, switch pattern, output); tiny n only.

    Exposed for cross-checks of the dense path; axes are the ``n`` domain
    axes, then ``n`` binary switch axes, then the output axis.
    """
    n = dist_tensor.order
    dims = dist_tensor.shape
    model = _with_output_axis(model_tensor, n)
    n_out = model.shape[-1]
    if math.prod(dims) * 2 ** n > GENERAL_DENSE_CAP * 4:
        raise ResourceLimitError("full value-tensor materialization is desk-scale only")
    out = np.zeros(dims + (2,) * n + (n_out,), dtype=np.float64)
    for switches in itertools.product((1, 2), repeat=n):
        keep = [s == 2 for s in switches]
        sw_idx = tuple(s - 1 for s in switches)
        for point in itertools.product(*(range(1, d + 1) for d in dims)):
            value = _coalition_value_dense(model, dist_tensor.array, point, keep)
            out[tuple(p - 1 for p in point) + sw_idx] = value
    return DenseTensor.from_array(out)


def shap_general_dense(
    model_tensor: DenseTensor,
    dist_tensor: DenseTensor,
    x: Sequence[int],
    cap: int = GENERAL_DENSE_CAP,
) -> ShapMatrix:
    """Dense attribution for arbitrary small tensors.

    The desk-scale general path: any network is first materialized, the
    value tensor slice at ``x`` is built by routing-and-averaging, and the
    result is contracted against the dense signed weight tensor.
    """
    n = dist_tensor.order
    dims = dist_tensor.shape
    if math.prod(dims) > cap:
        raise ResourceLimitError(f"domain of {math.prod(dims)} points exceeds cap {cap}")
    model = _with_output_axis(model_tensor, n)
    for j in range(n):
        if model.shape[j] != dims[j]:
            raise ShapeMismatchError(
                f"physical dimension mismatch at site {j + 1}: model {model.shape[j]} != "
                f"distribution {dims[j]}"
            )
    if len(x) != n:
        raise ValidationError(f"instance has {len(x)} symbols for {n} sites")
    for j, (symbol, dim) in enumerate(zip(x, dims), start=1):
        if not 1 <= symbol <= dim:
            raise ValidationError(f"symbol {symbol} out of range 1..{dim} at site {j}")

    n_out = model.shape[-1]
    value_slice = np.zeros((2,) * n + (n_out,), dtype=np.float64)
    for switches in itertools.product((1, 2), repeat=n):
        keep = [s == 2 for s in switches]
        value_slice[tuple(s - 1 for s in switches)] = _coalition_value_dense(
            model, dist_tensor.array, x, keep
        )
    weight = weight_tensor_dense(n)
    phi = np.tensordot(weight.array, value_slice, axes=(list(range(1, n + 1)), list(range(n))))
    return ShapMatrix(phi)

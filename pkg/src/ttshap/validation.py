"""Input validation helpers shared by the estimator front end and the CLI."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .compilers import ModelSpec
from .distributions import DistributionSpec, uniform_tt
from .errors import ValidationError
from .train import TensorTrain


def check_instance(x: Any, dims: Sequence[int]) -> tuple[int, ...]:
    """Coerce to a tuple of 1-based symbols and range-check against ``dims``."""
    if isinstance(x, dict):
        x = x.get("x")
    if x is None:
        raise ValidationError("instance is missing")
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"instance must be a non-empty vector, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.allclose(arr, rounded):
            raise ValidationError("instance symbols must be integers")
        arr = rounded.astype(np.int64)
    if arr.size != len(dims):
        raise ValidationError(f"instance has {arr.size} symbols for {len(dims)} features")
    for t, (symbol, dim) in enumerate(zip(arr.tolist(), dims), start=1):
        if not 1 <= symbol <= dim:
            raise ValidationError(f"symbol {symbol} out of range 1..{dim} at feature {t}")
    return tuple(int(v) for v in arr)


def coerce_model(model: Any) -> TensorTrain:
    """Accept a train, a ``ModelSpec``, or raw spec JSON; return the train."""
    if isinstance(model, TensorTrain):
        return model
    if isinstance(model, ModelSpec):
        return model.compile()
    if isinstance(model, dict):
        return ModelSpec.from_json(model).compile()
    raise ValidationError(f"cannot interpret {type(model).__name__} as a model")


def coerce_distribution(dist: Any, dims: Sequence[int] | None = None) -> TensorTrain:
    """Accept a train, spec, spec JSON, or None (uniform over ``dims``)."""
    if dist is None:
        if dims is None:
            raise ValidationError("a distribution (or feature dims for uniform) is required")
        return uniform_tt(dims)
    if isinstance(dist, TensorTrain):
        return dist
    if isinstance(dist, DistributionSpec):
        return dist.compile()
    if isinstance(dist, dict):
        if "cores" in dist and "kind" not in dist:
            return DistributionSpec(kind="tt", payload={"tt": dist}).compile()
        return DistributionSpec.from_json(dist).compile()
    raise ValidationError(f"cannot interpret {type(dist).__name__} as a distribution")

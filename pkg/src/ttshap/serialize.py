"""JSON wire formats for tensors, trains, attribution matrices, instances.

All artifacts round-trip bit-exactly: floats are emitted with Python's
repr, which json preserves.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError
from .tensor import DenseTensor
from .train import TensorTrain


def tensor_to_json(tensor: DenseTensor) -> dict[str, Any]:
    return {"shape": list(tensor.shape), "values": tensor.values}


def tensor_from_json(data: dict[str, Any]) -> DenseTensor:
    if not isinstance(data, dict) or "shape" not in data or "values" not in data:
        raise ValidationError("tensor JSON must carry 'shape' and 'values'")
    return DenseTensor(data["shape"], data["values"])


def tt_to_json(tt: TensorTrain) -> dict[str, Any]:
    return {"cores": [tensor_to_json(core) for core in tt.cores]}


def tt_from_json(data: dict[str, Any]) -> TensorTrain:
    if not isinstance(data, dict) or "cores" not in data:
        raise ValidationError("train JSON must carry a 'cores' list")
    return TensorTrain([tensor_from_json(core) for core in data["cores"]])


def shap_matrix_to_json(phi) -> dict[str, Any]:
    from .engine import ShapMatrix  # local import to keep the module graph acyclic

    assert isinstance(phi, ShapMatrix)
    features = phi.feature_names or [f"x{i}" for i in range(1, phi.n_features + 1)]
    outputs = phi.output_names or [f"y{j}" for j in range(1, phi.n_outputs + 1)]
    return {"features": features, "outputs": outputs, "phi": phi.values.tolist()}


def shap_matrix_from_json(data: dict[str, Any]):
    from .engine import ShapMatrix

    if not isinstance(data, dict) or "phi" not in data:
        raise ValidationError("attribution JSON must carry a 'phi' matrix")
    return ShapMatrix(
        np.asarray(data["phi"], dtype=np.float64),
        feature_names=data.get("features"),
        output_names=data.get("outputs"),
    )


def instance_from_json(data: Any) -> tuple[int, ...]:
    """Accept either a bare list of 1-based symbols or ``{"x": [...]}``."""
    if isinstance(data, dict):
        data = data.get("x")
    if not isinstance(data, (list, tuple)) or not data:
        raise ValidationError("instance must be a non-empty list of 1-based symbols")
    try:
        return tuple(int(v) for v in data)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"instance entries must be integers: {exc}") from exc


def load_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise ValidationError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc


def dump_json(data: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2)
        handle.write("\n")


def instance_to_json(x: Sequence[int]) -> dict[str, Any]:
    return {"x": [int(v) for v in x]}

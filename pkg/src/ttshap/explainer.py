"""Estimator-style front end so attribution composes with the usual
fit/transform ecosystem.

``fit`` binds (and compiles, when given declarative specs) the model and
the data distribution; ``explain`` maps one instance to its attribution
matrix and ``transform`` maps a batch of instances to a stacked array.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .engine import ShapMatrix, shap_tt
from .train import TensorTrain
from .validation import check_instance, coerce_distribution, coerce_model


class TensorTrainShapExplainer(BaseEstimator):
    """Exact marginal attribution for train-shaped models.

    Parameters
    ----------
    schedule:
        Contraction order of the per-site matrix chain, ``"sequential"``
        or ``"tree"``.  Both give the same values; the tree schedule is
        the parallel-friendly one.
    threads:
        Worker threads for the tree schedule.  Results are bit-identical
        for any thread count.
    """

    def __init__(self, schedule: str = "sequential", threads: int = 1):
        self.schedule = schedule
        self.threads = threads

    def fit(self, model: Any, dist: Any = None) -> "TensorTrainShapExplainer":
        """Bind a model and a distribution.

        ``model`` may be a ``TensorTrain``, a ``ModelSpec``, or spec
        JSON; ``dist`` likewise (``None`` means uniform over the model's
        feature domain).
        """
        model_tt = coerce_model(model)
        self.model_tt_ = model_tt
        self.dist_tt_ = coerce_distribution(dist, dims=model_tt.physical_dims)
        self.feature_dims_ = model_tt.physical_dims
        self.n_features_in_ = len(model_tt)
        self.n_outputs_ = model_tt.right_boundary
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_tt_"):
            raise NotFittedError("fit the explainer with a model and distribution first")

    def explain(self, x: Sequence[int]) -> ShapMatrix:
        """Attribution matrix (features by outputs) for one instance."""
        self._check_fitted()
        instance = check_instance(x, self.feature_dims_)
        return shap_tt(
            self.model_tt_,
            self.dist_tt_,
            instance,
            schedule=self.schedule,
            threads=self.threads,
        )

    def transform(self, X: Sequence[Sequence[int]]) -> np.ndarray:
        """Stacked attributions, shape ``(len(X), n_features, n_outputs)``."""
        self._check_fitted()
        rows = [self.explain(x).values for x in X]
        if not rows:
            return np.zeros((0, self.n_features_in_, self.n_outputs_))
        return np.stack(rows)

    def fit_transform(self, model: Any, dist: Any, X: Sequence[Sequence[int]]) -> np.ndarray:
        return self.fit(model, dist).transform(X)

    def expected_output(self) -> np.ndarray:
        """Distribution-average model output (the attribution baseline)."""
        self._check_fitted()
        from .engine import expected_value

        return expected_value(self.model_tt_, self.dist_tt_)

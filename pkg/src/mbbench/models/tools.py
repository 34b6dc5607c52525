"""The prediction tools evaluated by the benchmark, behind one contract.

A tool owns a subset of dataset columns and knows how to fit itself on a
training fold and score a held-out fold.  ``evaluate_fold`` returns the
held-out probabilities plus, for selection-performing tools, the set of
dataset columns with nonzero slopes (the support), which the benchmark
uses for the lasso/blanket coincidence statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ColumnMismatch
from .elasticnet import (CvLambdaResult, PenaltyConfig, ZERO_COEF_TOL,
                         cv_select_lambda, fit_penalized_path)
from .forest import ForestConfig, ForestModel, fit_random_forest
from .logistic import LogisticConfig, LogisticModel, fit_logistic


@dataclass(frozen=True)
class Predictor:
    """A fitted model plus the dataset columns it consumes."""

    kind: str
    columns: tuple[int, ...]
    model: LogisticModel | ForestModel
    support: frozenset[int] | None = None   # nonzero-slope columns, if sparse

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if X.ndim != 2 or (self.columns and X.shape[1] <= max(self.columns)):
            raise ColumnMismatch(
                f"input with {X.shape[1] if X.ndim == 2 else '?'} columns cannot "
                f"supply columns {self.columns}")
        return self.model.predict_proba(np.ascontiguousarray(X[:, self.columns]))


def predict_proba(predictor: Predictor, X: np.ndarray) -> np.ndarray:
    return predictor.predict_proba(X)


@dataclass
class LogisticTool:
    """Plain maximum-likelihood logistic regression on fixed columns."""

    name: str
    columns: tuple[int, ...]
    config: LogisticConfig = LogisticConfig()

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator | None = None) -> Predictor:
        model = fit_logistic(X[:, self.columns], y, self.config)
        return Predictor(self.name, self.columns, model)

    def evaluate_fold(self, Xtr, ytr, Xte, rng):
        pred = self.fit(Xtr, ytr, rng)
        return pred.predict_proba(Xte), None


@dataclass
class PenalizedTool:
    """Lasso / ridge / elastic net with cross-validated penalty selection.

    ``nested=True`` (the default) reselects the penalty inside every
    training fold with an inner ``inner_k``-fold split; ``nested=False``
    selects once on the full data during ``prepare`` and reuses that grid
    position in every fold.
    """

    name: str
    columns: tuple[int, ...]
    penalty: PenaltyConfig
    inner_k: int = 10
    nested: bool = True
    _fixed: CvLambdaResult | None = field(default=None, init=False, repr=False)

    def prepare(self, X, y, rng):
        if not self.nested:
            self._fixed = cv_select_lambda(X[:, self.columns], y, self.penalty,
                                           k=self.inner_k, rng=rng)

    def _support(self, model: LogisticModel) -> frozenset[int]:
        hits = np.flatnonzero(np.abs(model.coef) >= ZERO_COEF_TOL)
        return frozenset(self.columns[j] for j in hits)

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator | None = None) -> Predictor:
        Xc = X[:, self.columns]
        if self.nested:
            if rng is None:
                raise ValueError("nested penalty selection needs an rng")
            model = cv_select_lambda(Xc, y, self.penalty,
                                     k=self.inner_k, rng=rng).model
        else:
            if self._fixed is None:
                raise ValueError("prepare() must run before non-nested fits")
            from dataclasses import replace
            cfg = replace(self.penalty, lambda_grid=self._fixed.lambdas)
            path = fit_penalized_path(Xc, y, cfg)
            model = path.model_at(self._fixed.index)
        return Predictor(self.name, self.columns, model,
                         support=self._support(model))

    def evaluate_fold(self, Xtr, ytr, Xte, rng):
        pred = self.fit(Xtr, ytr, rng)
        return pred.predict_proba(Xte), pred.support


@dataclass
class ForestTool:
    """Bagged Gini trees on fixed columns."""

    name: str
    columns: tuple[int, ...]
    config: ForestConfig = ForestConfig()

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator | None = None) -> Predictor:
        model = fit_random_forest(X[:, self.columns], y, self.config, rng)
        return Predictor(self.name, self.columns, model)

    def evaluate_fold(self, Xtr, ytr, Xte, rng):
        pred = self.fit(Xtr, ytr, rng)
        return pred.predict_proba(Xte), None

"""Integrated Calibration Index and the cross-validated evaluation protocol.

The ICI of predictions ``p`` against binary outcomes ``y`` is the mean
absolute difference between ``p`` and a locally weighted polynomial smooth
of ``y`` on ``p`` (tricube kernel, nearest-neighbor span).  Lower is
better.  The smooth can fail — constant predictions give it nothing to
work with, and heavily tied predictions can make a local design singular —
so the score is carried as an :class:`IciOutcome` that is either a value
or an explicit uncomputability reason.  Tool evaluation is k-fold: fit on
k-1 folds, score the held-out fold, average; one failing fold makes the
whole evaluation uncomputable with that fold's reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import (ConstantPredictions, DegenerateOutcome, FoldDegenerate,
                     InvalidK, LengthMismatch, SmootherSingular)

REASON_CONSTANT_PREDICTIONS = "constant_predictions"
REASON_SMOOTHER_SINGULAR = "smoother_singular"
REASON_FOLD_DEGENERATE = "fold_degenerate"

REASONS = (REASON_CONSTANT_PREDICTIONS, REASON_SMOOTHER_SINGULAR,
           REASON_FOLD_DEGENERATE)

_CONSTANT_RANGE = 1e-6


@dataclass(frozen=True)
class SmootherConfig:
    span: float = 0.75   # nearest-neighbor fraction; window = ceil(span * n)
    degree: int = 1      # local polynomial degree, 1 or 2

    def __post_init__(self):
        if not 0.0 < self.span <= 1.0:
            raise ValueError(f"span must be in (0,1], got {self.span}")
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")


@dataclass(frozen=True)
class IciOutcome:
    """A calibration score or the reason none exists."""

    value: float | None = None
    reason: str | None = None

    def __post_init__(self):
        if (self.value is None) == (self.reason is None):
            raise ValueError("exactly one of value/reason must be set")
        if self.value is not None and self.value < 0.0:
            raise ValueError("ICI cannot be negative")
        if self.reason is not None and self.reason not in REASONS:
            raise ValueError(f"unknown reason {self.reason!r}")

    @classmethod
    def computed(cls, value: float) -> "IciOutcome":
        return cls(value=float(value))

    @classmethod
    def uncomputable(cls, reason: str) -> "IciOutcome":
        return cls(reason=reason)

    @property
    def ok(self) -> bool:
        return self.value is not None

    def to_json(self) -> dict:
        if self.ok:
            return {"value": self.value}
        return {"reason": self.reason}

    @classmethod
    def from_json(cls, doc: dict) -> "IciOutcome":
        if "value" in doc:
            return cls.computed(doc["value"])
        return cls.uncomputable(doc["reason"])


@njit(cache=True)
def _loess_sorted(x, y, k, degree, out):
    """Local polynomial fit at each sorted x; returns (status, bad_index).

    status 0: ok; 1: a window had no usable spread or a singular design.
    Distances are scaled by the window half-width, so the local moments
    are all bounded by the weight total and the singularity test can be a
    clean relative threshold on the determinant.
    """
    n = x.shape[0]
    lo = 0
    hi = k
    for i in range(n):
        while hi <= i:
            lo += 1
            hi += 1
        while hi < n and (x[hi] - x[i]) < (x[i] - x[lo]):
            lo += 1
            hi += 1
        left = x[i] - x[lo]
        right = x[hi - 1] - x[i]
        h = left if left > right else right
        if h <= 0.0:
            return 1, i
        s0 = s1 = s2 = s3 = s4 = 0.0
        t0 = t1 = t2 = 0.0
        for j in range(lo, hi):
            t = (x[j] - x[i]) / h
            at = abs(t)
            if at >= 1.0:
                continue
            u = 1.0 - at * at * at
            wgt = u * u * u
            s0 += wgt
            s1 += wgt * t
            tt = t * t
            s2 += wgt * tt
            yj = y[j]
            t0 += wgt * yj
            t1 += wgt * t * yj
            if degree == 2:
                s3 += wgt * tt * t
                s4 += wgt * tt * tt
                t2 += wgt * tt * yj
        if degree == 1:
            det = s0 * s2 - s1 * s1
            if det <= 1e-12 * s0 * s0:
                return 1, i
            out[i] = (s2 * t0 - s1 * t1) / det
        else:
            det = (s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s2 * s3)
                   + s2 * (s1 * s3 - s2 * s2))
            if det <= 1e-12 * s0 * s0 * s0:
                return 1, i
            out[i] = (t0 * (s2 * s4 - s3 * s3) - s1 * (t1 * s4 - s3 * t2)
                      + s2 * (t1 * s3 - s2 * t2)) / det
    return 0, -1


def loess_smooth(x: np.ndarray, y: np.ndarray,
                 config: SmootherConfig = SmootherConfig()) -> np.ndarray:
    """Fitted values of a tricube-weighted local polynomial at each ``x``.

    Raises :class:`ConstantPredictions` when ``x`` has (numerically) no
    range and :class:`SmootherSingular` when there are fewer than
    ``degree + 2`` distinct values or a local design is rank deficient.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise LengthMismatch("x and y must have equal length")
    n = x.shape[0]
    k = min(n, int(math.ceil(config.span * n)))
    if k < config.degree + 2:
        raise ValueError(
            f"window of {k} points cannot support a degree-{config.degree} fit; "
            "increase the span or the sample")
    if float(x.max() - x.min()) <= _CONSTANT_RANGE:
        raise ConstantPredictions("predictions have no usable range")
    if np.unique(x).size < config.degree + 2:
        raise SmootherSingular(
            f"need at least {config.degree + 2} distinct x values")
    order = np.argsort(x, kind="stable")
    xs = np.ascontiguousarray(x[order])
    ys = np.ascontiguousarray(y[order])
    fitted_sorted = np.empty(n)
    status, bad = _loess_sorted(xs, ys, k, config.degree, fitted_sorted)
    if status != 0:
        raise SmootherSingular(f"rank-deficient local design near x={xs[bad]!r}")
    fitted = np.empty(n)
    fitted[order] = fitted_sorted
    return fitted


def ici(y: np.ndarray, p: np.ndarray,
        config: SmootherConfig = SmootherConfig()) -> IciOutcome:
    """Integrated Calibration Index of predicted risks ``p`` for ``y``."""
    y = np.asarray(y, dtype=np.float64).ravel()
    p = np.asarray(p, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise LengthMismatch("y and p must have equal length")
    if p.min() < -1e-12 or p.max() > 1.0 + 1e-12:
        raise ValueError("predictions must lie in [0,1]")
    p = np.clip(p, 0.0, 1.0)
    try:
        curve = loess_smooth(p, y, config)
    except ConstantPredictions:
        return IciOutcome.uncomputable(REASON_CONSTANT_PREDICTIONS)
    except SmootherSingular:
        return IciOutcome.uncomputable(REASON_SMOOTHER_SINGULAR)
    curve = np.clip(curve, 0.0, 1.0)
    return IciOutcome.computed(float(np.mean(np.abs(curve - p))))


def kfold_split(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Disjoint index folds with sizes differing by at most one."""
    if not 2 <= k <= n:
        raise InvalidK(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
    perm = rng.permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


@dataclass(frozen=True)
class CvToolResult:
    """Per-fold detail of one tool's cross-validated evaluation."""

    outcome: IciOutcome
    fold_outcomes: tuple[IciOutcome, ...]
    fold_supports: tuple[frozenset[int] | None, ...]


def cv_evaluate(dataset, tool, k: int = 10,
                rng: np.random.Generator | None = None,
                folds: Sequence[np.ndarray] | None = None,
                smoother: SmootherConfig = SmootherConfig()) -> CvToolResult:
    """Cross-validate ``tool`` on ``dataset``; never raises for data reasons.

    ``tool`` needs ``evaluate_fold(X_train, y_train, X_test, rng) ->
    (p_test, support_or_None)`` and may define ``prepare(X, y, rng)`` for
    work shared across folds.  Every fold is evaluated even after a
    failure so fold-level supports stay available; the overall outcome is
    the mean of the fold scores, or the first failing fold's reason.
    """
    if rng is None:
        raise ValueError("rng is required")
    X = np.ascontiguousarray(dataset.predictors, dtype=np.float64)
    y = np.asarray(dataset.outcome, dtype=np.float64)
    if folds is None:
        folds = kfold_split(X.shape[0], k, rng)
    fold_rngs = rng.spawn(len(folds) + 1)
    prepare = getattr(tool, "prepare", None)
    if prepare is not None:
        prepare(X, y, fold_rngs[len(folds)])
    all_rows = np.arange(X.shape[0])
    outcomes: list[IciOutcome] = []
    supports: list[frozenset[int] | None] = []
    for f, test in enumerate(folds):
        train = np.setdiff1d(all_rows, test, assume_unique=True)
        support = None
        ytr = y[train]
        if ytr.min() == ytr.max():
            outcomes.append(IciOutcome.uncomputable(REASON_FOLD_DEGENERATE))
            supports.append(None)
            continue
        try:
            p_test, support = tool.evaluate_fold(X[train], ytr, X[test],
                                                 fold_rngs[f])
        except (DegenerateOutcome, FoldDegenerate):
            outcomes.append(IciOutcome.uncomputable(REASON_FOLD_DEGENERATE))
            supports.append(None)
            continue
        outcomes.append(ici(y[test], p_test, smoother))
        supports.append(support)
    failed = [o for o in outcomes if not o.ok]
    if failed:
        overall = IciOutcome.uncomputable(failed[0].reason)
    else:
        overall = IciOutcome.computed(float(np.mean([o.value for o in outcomes])))
    return CvToolResult(overall, tuple(outcomes), tuple(supports))


def cv_ici(dataset, tool, k: int = 10,
           rng: np.random.Generator | None = None,
           folds: Sequence[np.ndarray] | None = None,
           smoother: SmootherConfig = SmootherConfig()) -> IciOutcome:
    """Mean of the k fold ICIs, or the first failing fold's reason."""
    return cv_evaluate(dataset, tool, k=k, rng=rng, folds=folds,
                       smoother=smoother).outcome

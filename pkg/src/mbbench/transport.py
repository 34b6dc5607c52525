"""Transport experiments on two-node binary models.

A single-predictor risk model is fit in a source population and then
frozen and applied to a target population in which only the exogenous
prevalence of the *cause* has changed.  In the causal direction (model
predicts effect from cause) the conditional being modeled is the
mechanism itself, so the frozen model stays calibrated stratum by
stratum.  In the anticausal direction (model predicts the cause from its
effect) the modeled conditional is a Bayes inversion that mixes the
mechanism with the shifted prevalence, so the frozen model's stratum
probabilities drift away from the target truth by an analytically
computable gap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import IciOutcome, SmootherConfig, ici, kfold_split
from .errors import DegenerateMixture
from .mathutil import expit, logit
from .models.logistic import fit_logistic

CAUSAL = "causal"
ANTICAUSAL = "anticausal"


@dataclass(frozen=True)
class TwoNodeSpec:
    """Binary cause -> binary effect with a logistic mechanism.

    ``mechanism`` is (intercept, slope) on the logit scale for
    P(effect = 1 | cause).  ``direction`` states which variable the risk
    model predicts: ``causal`` models effect-from-cause, ``anticausal``
    models cause-from-effect.
    """

    direction: str
    cause_prevalence: float
    mechanism: tuple[float, float]

    def __post_init__(self):
        if self.direction not in (CAUSAL, ANTICAUSAL):
            raise ValueError(f"unknown direction {self.direction!r}")
        if not 0.0 < self.cause_prevalence < 1.0:
            raise ValueError("cause prevalence must be strictly inside (0,1)")
        if not all(np.isfinite(self.mechanism)):
            raise ValueError("mechanism parameters must be finite")

    @classmethod
    def from_likelihoods(cls, direction: str, cause_prevalence: float,
                         p_effect_given_cause1: float,
                         p_effect_given_cause0: float) -> "TwoNodeSpec":
        b0 = logit(p_effect_given_cause0)
        b1 = logit(p_effect_given_cause1) - b0
        return cls(direction, cause_prevalence, (float(b0), float(b1)))

    def effect_prob(self, cause: int) -> float:
        a, b = self.mechanism
        return float(expit(a + b * cause))


def analytic_posterior(prevalence: float, p_effect_given_cause1: float,
                       p_effect_given_cause0: float) -> tuple[float, float]:
    """Exact Bayes inversion: P(cause=1 | effect=1), P(cause=1 | effect=0)."""
    for name, v in (("prevalence", prevalence),
                    ("p_effect_given_cause1", p_effect_given_cause1),
                    ("p_effect_given_cause0", p_effect_given_cause0)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must be in (0,1), got {v}")
    m1 = prevalence * p_effect_given_cause1 + (1 - prevalence) * p_effect_given_cause0
    m0 = prevalence * (1 - p_effect_given_cause1) + (1 - prevalence) * (1 - p_effect_given_cause0)
    if m1 <= 0.0 or m0 <= 0.0:
        raise DegenerateMixture("an effect stratum has zero probability")
    return (prevalence * p_effect_given_cause1 / m1,
            prevalence * (1 - p_effect_given_cause1) / m0)


@dataclass(frozen=True)
class TransportReport:
    """Stratum-level calibration of a frozen model after a prevalence shift.

    All per-stratum tuples are indexed by the predictor value (0, 1).
    ``analytic_gap`` is the drift implied by exact Bayes arithmetic;
    ``gap`` is the measured |frozen model - target empirical| per stratum.
    """

    direction: str
    source_prevalence: float
    target_prevalence: float
    model_intercept: float
    model_slope: float
    model_prob: tuple[float, float]
    source_truth_analytic: tuple[float, float]
    source_truth_empirical: tuple[float, float]
    target_truth_analytic: tuple[float, float]
    target_truth_empirical: tuple[float, float]
    gap: tuple[float, float]
    analytic_gap: tuple[float, float]
    target_ici: IciOutcome
    n_obs: int

    @property
    def max_gap(self) -> float:
        return max(self.gap)

    def to_json(self) -> dict:
        doc = {
            "direction": self.direction,
            "source_prevalence": self.source_prevalence,
            "target_prevalence": self.target_prevalence,
            "model": {"intercept": self.model_intercept, "slope": self.model_slope},
            "n_obs": self.n_obs,
            "target_ici": self.target_ici.to_json(),
        }
        for key in ("model_prob", "source_truth_analytic", "source_truth_empirical",
                    "target_truth_analytic", "target_truth_empirical", "gap",
                    "analytic_gap"):
            doc[key] = list(getattr(self, key))
        return doc


def _simulate_pair(spec: TwoNodeSpec, prevalence: float, n_obs: int,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    cause = (rng.random(n_obs) < prevalence).astype(np.float64)
    p_eff = expit(spec.mechanism[0] + spec.mechanism[1] * cause)
    effect = (rng.random(n_obs) < p_eff).astype(np.float64)
    return cause, effect


def _stratum_means(pred: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    out = []
    for v in (0.0, 1.0):
        mask = pred == v
        out.append(float(target[mask].mean()) if mask.any() else float("nan"))
    return tuple(out)


def _frozen_model_ici(y: np.ndarray, p: np.ndarray, k: int,
                      rng: np.random.Generator,
                      smoother: SmootherConfig) -> IciOutcome:
    """Fold-wise ICI of already-frozen predictions on target data."""
    folds = kfold_split(y.shape[0], k, rng)
    values = []
    for test in folds:
        outcome = ici(y[test], p[test], smoother)
        if not outcome.ok:
            return outcome
        values.append(outcome.value)
    return IciOutcome.computed(float(np.mean(values)))


def _run_shift(spec: TwoNodeSpec, shifted_prevalence: float, n_obs: int,
               rng: np.random.Generator, smoother: SmootherConfig) -> TransportReport:
    if not 0.0 < shifted_prevalence < 1.0:
        raise ValueError("shifted prevalence must be strictly inside (0,1)")
    src = rng.spawn(3)
    cause_s, effect_s = _simulate_pair(spec, spec.cause_prevalence, n_obs, src[0])
    cause_t, effect_t = _simulate_pair(spec, shifted_prevalence, n_obs, src[1])

    if spec.direction == CAUSAL:
        x_s, y_s = cause_s, effect_s
        x_t, y_t = cause_t, effect_t
        # the modeled conditional is the mechanism: invariant under the shift
        truth_src = (spec.effect_prob(0), spec.effect_prob(1))
        truth_tgt = truth_src
    else:
        x_s, y_s = effect_s, cause_s
        x_t, y_t = effect_t, cause_t
        p1, p0 = spec.effect_prob(1), spec.effect_prob(0)
        s1, s0 = analytic_posterior(spec.cause_prevalence, p1, p0)
        t1, t0 = analytic_posterior(shifted_prevalence, p1, p0)
        truth_src = (s0, s1)
        truth_tgt = (t0, t1)

    model = fit_logistic(x_s.reshape(-1, 1), y_s)
    slope = float(model.coef[0]) if model.coef.size else 0.0
    model_prob = (float(expit(model.intercept)),
                  float(expit(model.intercept + slope)))
    emp_src = _stratum_means(x_s, y_s)
    emp_tgt = _stratum_means(x_t, y_t)
    gap = tuple(abs(model_prob[v] - emp_tgt[v]) for v in (0, 1))
    analytic_gap = tuple(abs(truth_src[v] - truth_tgt[v]) for v in (0, 1))
    p_frozen = model.predict_proba(x_t.reshape(-1, 1))
    target_ici = _frozen_model_ici(y_t, p_frozen, 10, src[2], smoother)
    return TransportReport(
        direction=spec.direction,
        source_prevalence=spec.cause_prevalence,
        target_prevalence=shifted_prevalence,
        model_intercept=float(model.intercept),
        model_slope=slope,
        model_prob=model_prob,
        source_truth_analytic=truth_src,
        source_truth_empirical=emp_src,
        target_truth_analytic=truth_tgt,
        target_truth_empirical=emp_tgt,
        gap=gap,
        analytic_gap=analytic_gap,
        target_ici=target_ici,
        n_obs=n_obs,
    )


def run_causal_shift_experiment(spec: TwoNodeSpec, shifted_prevalence: float,
                                n_obs: int, rng: np.random.Generator,
                                smoother: SmootherConfig = SmootherConfig(),
                                ) -> TransportReport:
    """Fit effect-from-cause in the source, freeze, score in the target."""
    if spec.direction != CAUSAL:
        raise ValueError("spec.direction must be 'causal'")
    return _run_shift(spec, shifted_prevalence, n_obs, rng, smoother)


def run_anticausal_shift_experiment(spec: TwoNodeSpec, shifted_cause_prevalence: float,
                                    n_obs: int, rng: np.random.Generator,
                                    smoother: SmootherConfig = SmootherConfig(),
                                    ) -> TransportReport:
    """Fit cause-from-effect in the source, freeze, score in the target.

    The shift moves the exogenous prevalence of the cause, which changes
    both the effect marginal and the modeled conditional.
    """
    if spec.direction != ANTICAUSAL:
        raise ValueError("spec.direction must be 'anticausal'")
    return _run_shift(spec, shifted_cause_prevalence, n_obs, rng, smoother)


def write_transport_reports(reports: list[TransportReport], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.to_json() for r in reports], indent=2) + "\n")


def format_transport_table(reports: list[TransportReport]) -> str:
    header = ("direction\tsource_prev\ttarget_prev\tstratum\tmodel\t"
              "target_truth\tgap\tanalytic_gap")
    lines = [header]
    for r in reports:
        for v in (0, 1):
            lines.append("\t".join([
                r.direction, f"{r.source_prevalence:g}", f"{r.target_prevalence:g}",
                str(v), f"{r.model_prob[v]:.6f}", f"{r.target_truth_empirical[v]:.6f}",
                f"{r.gap[v]:.6f}", f"{r.analytic_gap[v]:.6f}",
            ]))
    return "\n".join(lines) + "\n"

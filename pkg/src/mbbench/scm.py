"""Random structural causal models and ancestral dataset simulation.

The generative protocol: nodes are ordered, each ordered pair (i, j) with
i < j receives the directed edge i -> j independently with a fixed
probability; one node is the binary outcome, every other node is
continuous.  Exogenous continuous nodes are standard normal; an exogenous
outcome is Bernoulli(0.2).  Endogenous continuous nodes are unit-variance
normal around a linear combination of their parents with intercept and
coefficients drawn uniformly from (-2, 2); an endogenous outcome is
Bernoulli with inverse-logit link and uniform (-1, 1) coefficients.  The
binary outcome enters its children's linear combinations as 0/1.

Draw order is part of the determinism contract and is documented on each
function.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import IndexOutOfRange, InvalidProbability, NotExogenous
from .graph import (Dag, KIND_BINARY, KIND_CONTINUOUS, dag_from_dict, dag_to_dict,
                    topological_order, validate_acyclic)

OUTCOME_COEF_RANGE = (-1.0, 1.0)
CONTINUOUS_COEF_RANGE = (-2.0, 2.0)
DEFAULT_EVENT_PROB = 0.2


@dataclass(frozen=True)
class ExogenousSpec:
    """Noise distribution of a parentless node.

    ``normal`` is standard normal; ``bernoulli`` carries its event
    probability ``q`` (used for an exogenous outcome).
    """

    dist: str
    q: float = DEFAULT_EVENT_PROB

    def __post_init__(self):
        if self.dist not in ("normal", "bernoulli"):
            raise ValueError(f"unknown exogenous distribution {self.dist!r}")
        if self.dist == "bernoulli" and not 0.0 < self.q < 1.0:
            raise InvalidProbability(f"event probability must be in (0,1), got {self.q}")


@dataclass(frozen=True)
class Scm:
    """A DAG plus per-node mechanisms; immutable once sampled."""

    dag: Dag
    outcome: int
    intercepts: Mapping[int, float]                  # endogenous nodes only
    edge_coefficients: Mapping[tuple[int, int], float]  # (parent, child) -> coef
    exogenous: Mapping[int, ExogenousSpec]           # exogenous nodes only

    def __post_init__(self):
        n = self.dag.node_count
        if not 0 <= self.outcome < n:
            raise IndexOutOfRange(f"outcome index {self.outcome} out of range")
        edge_keys = {(u, v) for u, v in self.dag.edges()}
        if set(self.edge_coefficients) != edge_keys:
            raise ValueError("edge_coefficients keys must coincide exactly with dag edges")
        endo = {v for v in range(n) if self.dag.parent_sets[v]}
        if set(self.intercepts) != endo:
            raise ValueError("intercepts must cover exactly the endogenous nodes")
        if set(self.exogenous) != set(range(n)) - endo:
            raise ValueError("exogenous specs must cover exactly the parentless nodes")
        for v, a in self.intercepts.items():
            lo, hi = self.coef_range(v)
            if not lo < a < hi:
                raise ValueError(f"intercept {a} of node {v} outside ({lo},{hi})")
        for (u, v), b in self.edge_coefficients.items():
            lo, hi = self.coef_range(v)
            if not lo < b < hi:
                raise ValueError(f"coefficient {b} on edge {u}->{v} outside ({lo},{hi})")
        for v, spec in self.exogenous.items():
            want = "bernoulli" if v == self.outcome else "normal"
            if spec.dist != want:
                raise ValueError(f"exogenous node {v} must be {want}, got {spec.dist}")

    def node_kind(self, v: int) -> str:
        return "binary_outcome" if v == self.outcome else "continuous"

    def coef_range(self, v: int) -> tuple[float, float]:
        return OUTCOME_COEF_RANGE if v == self.outcome else CONTINUOUS_COEF_RANGE


@dataclass(frozen=True)
class Dataset:
    """Simulated observations: predictors in node order minus the outcome."""

    predictors: np.ndarray        # (n_obs, node_count - 1) float64
    outcome: np.ndarray           # (n_obs,) uint8 in {0,1}
    column_labels: tuple[str, ...]
    outcome_label: str
    seed_record: str = ""

    def __post_init__(self):
        n, p = self.predictors.shape
        if self.outcome.shape != (n,):
            raise ValueError("outcome length must match predictor rows")
        if len(self.column_labels) != p:
            raise ValueError("one label per predictor column required")
        if not np.isfinite(self.predictors).all():
            raise ValueError("predictor matrix contains non-finite values")
        if not np.isin(self.outcome, (0, 1)).all():
            raise ValueError("outcome entries must be 0/1")

    @property
    def n_obs(self) -> int:
        return self.predictors.shape[0]

    @property
    def n_predictors(self) -> int:
        return self.predictors.shape[1]


def random_dag(n_nodes: int, edge_prob: float, rng: np.random.Generator) -> Dag:
    """Random ordered DAG: edge i -> j for i < j with probability ``edge_prob``.

    Draw order: one uniform per (i, j) pair, row-major over the strict upper
    triangle.  The node order 0..n-1 is a topological order by construction.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise InvalidProbability(f"edge probability must be in [0,1], got {edge_prob}")
    u = rng.random((n_nodes, n_nodes))
    hit = u < edge_prob
    labels = tuple(f"x{i + 1}" for i in range(n_nodes))
    parents = []
    for j in range(n_nodes):
        parents.append(frozenset(i for i in range(j) if hit[i, j]))
    return Dag(labels, tuple(parents))


def sample_scm(dag: Dag, outcome: int, rng: np.random.Generator) -> Scm:
    """Draw mechanism parameters for every node of ``dag``.

    Draw order: nodes in ascending index; for an endogenous node the
    intercept first, then one coefficient per parent in ascending parent
    index.  Exogenous nodes consume no draws.
    """
    dag._check_index(outcome)
    intercepts: dict[int, float] = {}
    coefs: dict[tuple[int, int], float] = {}
    exo: dict[int, ExogenousSpec] = {}
    for v in range(dag.node_count):
        parents = sorted(dag.parent_sets[v])
        if not parents:
            if v == outcome:
                exo[v] = ExogenousSpec("bernoulli", DEFAULT_EVENT_PROB)
            else:
                exo[v] = ExogenousSpec("normal")
            continue
        lo, hi = OUTCOME_COEF_RANGE if v == outcome else CONTINUOUS_COEF_RANGE
        intercepts[v] = float(rng.uniform(lo, hi))
        for u in parents:
            coefs[(u, v)] = float(rng.uniform(lo, hi))
    return Scm(dag, outcome, intercepts, coefs, exo)


def _expit(x: np.ndarray) -> np.ndarray:
    # numerically stable inverse logit
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def simulate_dataset(scm: Scm, n_obs: int, rng: np.random.Generator,
                     seed_record: str = "") -> Dataset:
    """Ancestral sampling of ``n_obs`` independent rows.

    Draw order: nodes in topological order (ascending-index tie-break);
    each node consumes exactly one length-``n_obs`` draw (standard normals
    for continuous nodes, uniforms for the Bernoulli outcome).
    """
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    validate_acyclic(scm.dag)
    n_nodes = scm.dag.node_count
    values = np.empty((n_obs, n_nodes), dtype=np.float64)
    for v in topological_order(scm.dag):
        parents = sorted(scm.dag.parent_sets[v])
        if parents:
            mean = np.full(n_obs, scm.intercepts[v])
            for u in parents:
                mean += scm.edge_coefficients[(u, v)] * values[:, u]
            if v == scm.outcome:
                values[:, v] = rng.random(n_obs) < _expit(mean)
            else:
                values[:, v] = mean + rng.standard_normal(n_obs)
        else:
            spec = scm.exogenous[v]
            if spec.dist == "bernoulli":
                values[:, v] = rng.random(n_obs) < spec.q
            else:
                values[:, v] = rng.standard_normal(n_obs)
    cols = [v for v in range(n_nodes) if v != scm.outcome]
    return Dataset(
        predictors=np.ascontiguousarray(values[:, cols]),
        outcome=values[:, scm.outcome].astype(np.uint8),
        column_labels=tuple(scm.dag.labels[v] for v in cols),
        outcome_label=scm.dag.labels[scm.outcome],
        seed_record=seed_record,
    )


def shift_exogenous(scm: Scm, node: int, new_spec: ExogenousSpec) -> Scm:
    """Replace one exogenous noise distribution, leaving every mechanism
    (intercepts, coefficients, other noise terms) untouched."""
    scm.dag._check_index(node)
    if node not in scm.exogenous:
        raise NotExogenous(f"node {node} has parents; only exogenous nodes can be shifted")
    exo = dict(scm.exogenous)
    exo[node] = new_spec
    return replace(scm, exogenous=exo)


# -- file formats --------------------------------------------------------

def scm_to_dict(scm: Scm) -> dict:
    dag = scm.dag
    kinds = tuple(KIND_BINARY if v == scm.outcome else KIND_CONTINUOUS
                  for v in range(dag.node_count))
    doc = dag_to_dict(Dag(dag.labels, dag.parent_sets, kinds))
    doc["outcome"] = dag.labels[scm.outcome]
    doc["intercepts"] = {dag.labels[v]: a for v, a in sorted(scm.intercepts.items())}
    doc["coefficients"] = [[dag.labels[u], dag.labels[v], b]
                           for (u, v), b in sorted(scm.edge_coefficients.items())]
    doc["exogenous"] = {
        dag.labels[v]: ({"dist": "bernoulli", "q": spec.q} if spec.dist == "bernoulli"
                        else {"dist": "normal"})
        for v, spec in sorted(scm.exogenous.items())
    }
    return doc


def scm_from_dict(doc: dict) -> Scm:
    dag = dag_from_dict(doc)
    outcome = dag.index_of(doc["outcome"])
    intercepts = {dag.index_of(name): float(a) for name, a in doc["intercepts"].items()}
    coefs = {(dag.index_of(u), dag.index_of(v)): float(b)
             for u, v, b in doc["coefficients"]}
    exo = {}
    for name, spec in doc["exogenous"].items():
        if spec["dist"] == "bernoulli":
            exo[dag.index_of(name)] = ExogenousSpec("bernoulli", float(spec["q"]))
        else:
            exo[dag.index_of(name)] = ExogenousSpec("normal")
    return Scm(dag, outcome, intercepts, coefs, exo)


def write_scm_json(scm: Scm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scm_to_dict(scm), indent=2) + "\n")


def read_scm_json(path: str | Path) -> Scm:
    return scm_from_dict(json.loads(Path(path).read_text()))


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    """CSV with one header row; predictor columns first, outcome last.

    Floats are written with repr precision so a re-read reproduces the
    exact values.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.column_labels) + [dataset.outcome_label])
        for i in range(dataset.n_obs):
            row = [repr(float(v)) for v in dataset.predictors[i]]
            row.append(str(int(dataset.outcome[i])))
            writer.writerow(row)


def read_dataset_csv(path: str | Path, seed_record: str = "") -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    preds = np.array([[float(v) for v in row[:-1]] for row in rows], dtype=np.float64)
    if preds.size == 0:
        preds = preds.reshape(len(rows), len(header) - 1)
    outcome = np.array([int(row[-1]) for row in rows], dtype=np.uint8)
    return Dataset(preds, outcome, tuple(header[:-1]), header[-1], seed_record)

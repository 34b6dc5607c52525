"""Simulation-study harness: generate, fit, score, and summarize.

One benchmark dataset is: a random ordered DAG, a uniformly chosen
outcome node, a sampled mechanism set, and a simulated sample.  Eight
prediction tools are cross-validated on it — four plain logistic
regressions on graph-derived predictor sets (Markov blanket, everything,
undirected-path-connected, parents) and four all-column learners (lasso,
ridge, elastic net, random forest).  Per-dataset results stream to
newline-delimited JSON in index order so runs are resumable and
re-aggregable offline; every row is a pure function of
(config, master_seed, index), which makes the row file independent of the
worker count.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import rng as rngmod
from .calibration import (IciOutcome, SmootherConfig, cv_evaluate, kfold_split)
from .errors import EmptyInput
from .graph import Dag, connected_component, markov_blanket
from .models.elasticnet import PenaltyConfig
from .models.forest import ForestConfig
from .models.tools import ForestTool, LogisticTool, PenalizedTool
from .scm import Dataset, random_dag, sample_scm, simulate_dataset

TOOL_ORDER = ("logistic_mb", "logistic_all", "logistic_path", "logistic_parents",
              "lasso", "ridge", "elastic_net", "random_forest")

MB_TOOL = "logistic_mb"

PRESETS: dict[str, dict] = {
    "quick": {"n_datasets": 200, "n_obs": 2_000, "forest_trees": 200},
    "desk": {"n_datasets": 500, "n_obs": 10_000, "forest_trees": 500},
    "paper": {"n_datasets": 100_000, "n_obs": 10_000, "forest_trees": 1_000},
}


@dataclass(frozen=True)
class BenchConfig:
    n_datasets: int = 500
    n_nodes: int = 25
    edge_prob: float = 0.1
    n_obs: int = 10_000
    k_folds: int = 10
    forest_trees: int = 1_000
    master_seed: int = 0
    tools: tuple[str, ...] = TOOL_ORDER
    nested_lambda: bool = True
    inner_k: int = 10
    n_lambda: int = 100
    smoother_span: float = 0.75
    smoother_degree: int = 1
    preset: str | None = None

    def __post_init__(self):
        for t in self.tools:
            if t not in TOOL_ORDER:
                raise ValueError(f"unknown tool {t!r}")
        if self.n_datasets < 1 or self.n_obs < 1 or self.n_nodes < 2:
            raise ValueError("counts must be positive (and n_nodes >= 2)")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must be in [0,1]")

    def smoother(self) -> SmootherConfig:
        return SmootherConfig(self.smoother_span, self.smoother_degree)

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["tools"] = list(self.tools)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "BenchConfig":
        doc = dict(doc)
        doc["tools"] = tuple(doc.get("tools", TOOL_ORDER))
        return cls(**doc)


def preset_config(name: str, master_seed: int = 0, **overrides) -> BenchConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    fields = {"master_seed": master_seed, "preset": name}
    fields.update(PRESETS[name])
    fields.update(overrides)
    return BenchConfig(**fields)


def predictor_sets(dag: Dag, outcome: int) -> dict[str, frozenset[int]]:
    """The four graph-derived predictor sets, as node-index sets."""
    return {
        "mb": markov_blanket(dag, outcome),
        "all": frozenset(v for v in range(dag.node_count) if v != outcome),
        "path_connected": connected_component(dag, outcome),
        "parents": dag.parents(outcome),
    }


def _columns(nodes: Iterable[int], outcome: int) -> tuple[int, ...]:
    """Map node indices to predictor-matrix columns (outcome removed)."""
    return tuple(sorted(v if v < outcome else v - 1 for v in nodes))


def build_tools(config: BenchConfig, sets: dict[str, frozenset[int]],
                outcome: int) -> dict[str, object]:
    p_all = config.n_nodes - 1
    all_cols = tuple(range(p_all))
    penalty = dict(n_lambda=config.n_lambda)
    tools: dict[str, object] = {
        "logistic_mb": LogisticTool("logistic_mb", _columns(sets["mb"], outcome)),
        "logistic_all": LogisticTool("logistic_all", all_cols),
        "logistic_path": LogisticTool(
            "logistic_path", _columns(sets["path_connected"], outcome)),
        "logistic_parents": LogisticTool(
            "logistic_parents", _columns(sets["parents"], outcome)),
        "lasso": PenalizedTool("lasso", all_cols, PenaltyConfig(1.0, **penalty),
                               inner_k=config.inner_k, nested=config.nested_lambda),
        "ridge": PenalizedTool("ridge", all_cols, PenaltyConfig(0.0, **penalty),
                               inner_k=config.inner_k, nested=config.nested_lambda),
        "elastic_net": PenalizedTool("elastic_net", all_cols,
                                     PenaltyConfig(0.5, **penalty),
                                     inner_k=config.inner_k,
                                     nested=config.nested_lambda),
        "random_forest": ForestTool("random_forest", all_cols,
                                    ForestConfig(n_trees=config.forest_trees)),
    }
    return {name: tools[name] for name in TOOL_ORDER if name in config.tools}


def lasso_selected_exactly_mb(per_fold_supports: Sequence[frozenset[int] | None],
                              mb: frozenset[int]) -> bool:
    """True iff some fold's nonzero-slope set equals the blanket exactly."""
    return any(s is not None and s == mb for s in per_fold_supports)


@dataclass(frozen=True)
class DatasetRow:
    index: int
    mb_size: int
    parent_count: int
    component_size: int
    ici: dict[str, IciOutcome]
    n_inputs: dict[str, int]
    lasso_exact_mb: bool | None
    lasso_all_zero: bool | None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "mb_size": self.mb_size,
            "parent_count": self.parent_count,
            "component_size": self.component_size,
            "ici": {t: o.to_json() for t, o in self.ici.items()},
            "n_inputs": dict(self.n_inputs),
            "lasso_exact_mb": self.lasso_exact_mb,
            "lasso_all_zero": self.lasso_all_zero,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DatasetRow":
        return cls(
            index=int(doc["index"]),
            mb_size=int(doc["mb_size"]),
            parent_count=int(doc["parent_count"]),
            component_size=int(doc["component_size"]),
            ici={t: IciOutcome.from_json(o) for t, o in doc["ici"].items()},
            n_inputs={t: int(v) for t, v in doc["n_inputs"].items()},
            lasso_exact_mb=doc.get("lasso_exact_mb"),
            lasso_all_zero=doc.get("lasso_all_zero"),
        )


def run_single_dataset(index: int, config: BenchConfig) -> DatasetRow:
    """Simulate dataset ``index`` and cross-validate every enabled tool.

    Failures surface as uncomputable score entries, never as exceptions.
    All streams are keyed by (master_seed, index, purpose), and all tools
    share the same outer fold partition.
    """
    seed = config.master_seed
    dag = random_dag(config.n_nodes, config.edge_prob,
                     rngmod.substream(seed, index, rngmod.STREAM_DAG))
    outcome = int(rngmod.substream(seed, index, rngmod.STREAM_OUTCOME)
                  .integers(config.n_nodes))
    scm = sample_scm(dag, outcome, rngmod.substream(seed, index, rngmod.STREAM_SCM))
    dataset = simulate_dataset(
        scm, config.n_obs, rngmod.substream(seed, index, rngmod.STREAM_DATA),
        seed_record=rngmod.stream_label(seed, index, rngmod.STREAM_DATA))
    sets = predictor_sets(dag, outcome)
    folds = kfold_split(config.n_obs, config.k_folds,
                        rngmod.substream(seed, index, rngmod.STREAM_FOLDS))
    tools = build_tools(config, sets, outcome)
    smoother = config.smoother()
    p_all = config.n_nodes - 1
    input_count = {
        "logistic_mb": len(sets["mb"]),
        "logistic_all": p_all,
        "logistic_path": len(sets["path_connected"]),
        "logistic_parents": len(sets["parents"]),
        "lasso": p_all, "ridge": p_all, "elastic_net": p_all,
        "random_forest": p_all,
    }
    icis: dict[str, IciOutcome] = {}
    n_inputs: dict[str, int] = {}
    lasso_exact = None
    lasso_zero = None
    for pos, name in enumerate(TOOL_ORDER):
        if name not in tools:
            continue
        tool_rng = rngmod.substream(seed, index, rngmod.STREAM_TOOL_BASE + pos)
        result = cv_evaluate(dataset, tools[name], k=config.k_folds,
                             rng=tool_rng, folds=folds, smoother=smoother)
        icis[name] = result.outcome
        n_inputs[name] = input_count[name]
        if name == "lasso":
            mb_cols = frozenset(_columns(sets["mb"], outcome))
            lasso_exact = lasso_selected_exactly_mb(result.fold_supports, mb_cols)
            lasso_zero = all(s is not None and len(s) == 0
                             for s in result.fold_supports)
    return DatasetRow(index, len(sets["mb"]), len(sets["parents"]),
                      len(sets["path_connected"]), icis, n_inputs,
                      lasso_exact, lasso_zero)


# -- aggregation ---------------------------------------------------------

def _summary(values: list[float], total: int) -> dict:
    out = {"n_missing": total - len(values)}
    if values:
        arr = np.asarray(values, dtype=np.float64)
        out.update(mean=float(arr.mean()),
                   sd=float(arr.std(ddof=1)) if arr.size > 1 else None,
                   median=float(np.median(arr)),
                   min=float(arr.min()), max=float(arr.max()))
    else:
        out.update(mean=None, sd=None, median=None, min=None, max=None)
    return out


def _head_to_head(rows: list[DatasetRow], tools: list[str]) -> dict:
    out: dict[str, dict] = {}
    if MB_TOOL not in tools:
        return out
    total = len(rows)
    for t in tools:
        if t == MB_TOOL:
            continue
        less = geq = 0
        for r in rows:
            a, b = r.ici.get(t), r.ici.get(MB_TOOL)
            if a is not None and b is not None and a.ok and b.ok:
                if a.value < b.value:
                    less += 1
                else:
                    geq += 1
        pairs = less + geq
        out[t] = {"n_missing": total - pairs, "n_less": less, "n_geq": geq,
                  "frac_geq": (geq / pairs) if pairs else None}
    return out


def _tool_block(rows: list[DatasetRow], tools: list[str]) -> dict:
    total = len(rows)
    block = {}
    for t in tools:
        ici_vals = [r.ici[t].value for r in rows if t in r.ici and r.ici[t].ok]
        input_vals = [float(r.n_inputs[t]) for r in rows if t in r.n_inputs]
        reasons: dict[str, int] = {}
        for r in rows:
            o = r.ici.get(t)
            if o is not None and not o.ok:
                reasons[o.reason] = reasons.get(o.reason, 0) + 1
        block[t] = {"ici": _summary(ici_vals, total),
                    "n_inputs": _summary(input_vals, total),
                    "missing_reasons": reasons}
    return block


def _lasso_mb_stats(rows: list[DatasetRow]) -> dict:
    flagged = [r for r in rows if r.lasso_exact_mb is not None]
    if not flagged:
        return {"n": 0}
    strata: dict[str, list[DatasetRow]] = {"0": [], "1": [], "2": [], "3+": []}
    for r in flagged:
        key = str(r.mb_size) if r.mb_size <= 2 else "3+"
        strata[key].append(r)
    by_size = {}
    for key, grp in strata.items():
        by_size[key] = {
            "n": len(grp),
            "exact_rate": (sum(r.lasso_exact_mb for r in grp) / len(grp)
                           if grp else None),
        }
    empty = strata["0"]
    return {
        "n": len(flagged),
        "exact_rate": sum(r.lasso_exact_mb for r in flagged) / len(flagged),
        "by_mb_size": by_size,
        "empty_mb_all_zero_rate": (sum(bool(r.lasso_all_zero) for r in empty)
                                   / len(empty) if empty else None),
        "empty_mb_n": len(empty),
    }


@dataclass(frozen=True)
class BenchReport:
    n_datasets: int
    tools: list[str]
    full: dict
    head_to_head: dict
    complete_case_n: int
    complete_case: dict
    head_to_head_cc: dict
    lasso_mb: dict
    config: dict | None = None
    meta: dict | None = None

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "BenchReport":
        return cls(**doc)


def aggregate(rows: Sequence[DatasetRow]) -> BenchReport:
    """Summaries over all rows and over the complete-case subset."""
    rows = list(rows)
    if not rows:
        raise EmptyInput("no rows to aggregate")
    tools = [t for t in TOOL_ORDER if any(t in r.ici for r in rows)]
    complete = [r for r in rows
                if all(t in r.ici and r.ici[t].ok for t in tools)]
    return BenchReport(
        n_datasets=len(rows),
        tools=tools,
        full=_tool_block(rows, tools),
        head_to_head=_head_to_head(rows, tools),
        complete_case_n=len(complete),
        complete_case=_tool_block(complete, tools) if complete else {},
        head_to_head_cc=_head_to_head(complete, tools) if complete else {},
        lasso_mb=_lasso_mb_stats(rows),
    )


# -- table formatting ----------------------------------------------------

def _tool_label(name: str, p_all: int) -> str:
    return {
        "logistic_mb": "Logistic, Markov Blanket set",
        "logistic_all": f"Logistic, all {p_all} variables",
        "logistic_path": "Logistic, any variables with a path to the outcome",
        "logistic_parents": "Logistic, node's parent variables",
        "lasso": f"Lasso, all {p_all} variables",
        "ridge": f"Ridge, all {p_all} variables",
        "elastic_net": f"Elastic net, all {p_all} variables",
        "random_forest": f"Random forest, all {p_all} variables",
    }[name]


def _fmt(v, digits=5):
    if v is None:
        return ""
    return f"{v:.{digits}f}"


def _stat_rows(block: dict, tools: list[str], key: str, digits: int) -> list[list[str]]:
    rows = []
    rows.append(["N Missing"] + [str(block[t][key]["n_missing"]) for t in tools])
    means = []
    for t in tools:
        s = block[t][key]
        if s["mean"] is None:
            means.append("")
        elif s["sd"] is None:
            means.append(_fmt(s["mean"], digits))
        else:
            means.append(f"{_fmt(s['mean'], digits)} ({_fmt(s['sd'], digits)})")
    rows.append(["Mean (SD)"] + means)
    rows.append(["Median"] + [_fmt(block[t][key]["median"], digits) for t in tools])
    ranges = []
    for t in tools:
        s = block[t][key]
        ranges.append("" if s["min"] is None
                      else f"{_fmt(s['min'], digits)} - {_fmt(s['max'], digits)}")
    rows.append(["Range"] + ranges)
    return rows


def _h2h_rows(h2h: dict, tools: list[str]) -> list[list[str]]:
    rows = []
    rows.append(["N Missing"] + ["" if t == MB_TOOL else str(h2h[t]["n_missing"])
                                 for t in tools])
    for label, key in (("< ICI logistic MB set, N (%)", "n_less"),
                       (">= ICI logistic MB set, N (%)", "n_geq")):
        cells = []
        for t in tools:
            if t == MB_TOOL or t not in h2h:
                cells.append("")
                continue
            d = h2h[t]
            pairs = d["n_less"] + d["n_geq"]
            pct = f" ({100.0 * d[key] / pairs:.2f}%)" if pairs else ""
            cells.append(f"{d[key]}{pct}")
        rows.append([label] + cells)
    return rows


def format_table(report: BenchReport, p_all: int | None = None) -> str:
    """Tab-separated comparison table, tools as columns."""
    tools = report.tools
    if p_all is None:
        cfg = report.config or {}
        p_all = int(cfg.get("n_nodes", 25)) - 1
    lines: list[list[str]] = []
    lines.append([""] + [f"{_tool_label(t, p_all)} (Nsim={report.n_datasets:,})"
                         for t in tools])
    ncols = len(tools) + 1

    def section(title):
        lines.append([title] + [""] * (ncols - 1))

    section("FULL RESULTS: Including all simulated datasets")
    section("ICI")
    lines.extend(_stat_rows(report.full, tools, "ici", 5))
    section("Number of input variables")
    lines.extend(_stat_rows(report.full, tools, "n_inputs", 1))
    section("Direct comparison: ICI of various methods compared to "
            "Markov Blanket-based logistic tool")
    lines.extend(_h2h_rows(report.head_to_head, tools))
    if report.complete_case:
        section("COMPLETE CASE RESULTS: only including datasets for which ICI "
                "could be estimated for all tools")
        section("ICI")
        lines.extend(_stat_rows(report.complete_case, tools, "ici", 5))
        section("Number of input variables")
        lines.extend(_stat_rows(report.complete_case, tools, "n_inputs", 1))
        section("Direct comparison: ICI of various methods compared to "
                "Markov Blanket-based logistic tool")
        lines.extend(_h2h_rows(report.head_to_head_cc, tools))
    return "\n".join("\t".join(row) for row in lines) + "\n"


# -- execution -----------------------------------------------------------

_WORKER_CONFIG: BenchConfig | None = None


def _worker_init(config: BenchConfig):
    global _WORKER_CONFIG
    _WORKER_CONFIG = config


def _worker_run(index: int) -> dict:
    return run_single_dataset(index, _WORKER_CONFIG).to_json()


def warm_kernels() -> None:
    """Compile (or load from cache) every numba kernel on tiny inputs.

    Called before forking workers so children inherit compiled code.
    """
    from .models.elasticnet import cv_select_lambda as _cvs
    from .models.forest import ForestConfig as _FC, fit_random_forest as _frf
    from .models.logistic import fit_logistic as _fl
    from .calibration import ici as _ici

    g = np.random.default_rng(0)
    X = g.standard_normal((40, 3))
    y = (g.random(40) < 0.5).astype(np.float64)
    if y.min() == y.max():  # pragma: no cover
        y[0] = 1.0 - y[0]
    _fl(X, y)
    _cvs(X, y, PenaltyConfig(0.5, n_lambda=5), k=2, rng=np.random.default_rng(1))
    m = _frf(X, y.astype(np.uint8), _FC(n_trees=2), np.random.default_rng(2))
    m.predict_proba(X)
    _ici(y, np.clip(g.random(40), 0.01, 0.99))


def _load_existing_rows(rows_path: Path, config: BenchConfig) -> list[DatasetRow]:
    meta_path = rows_path.with_suffix(".meta.json")
    if not rows_path.exists() or not meta_path.exists():
        return []
    meta = json.loads(meta_path.read_text())
    if meta.get("config") != config.to_json():
        raise ValueError(
            f"existing row file {rows_path} was produced by a different "
            "configuration; refusing to resume")
    rows = []
    for line in rows_path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            break  # trailing partial line from an interrupted run
        rows.append(DatasetRow.from_json(doc))
    for want, row in enumerate(rows):
        if row.index != want:
            raise ValueError(f"row file {rows_path} is not an index-ordered prefix")
    return rows


def run_benchmark(config: BenchConfig, out_dir: str | Path | None = None,
                  workers: int | None = None, resume: bool = False,
                  progress: Callable[[int, int], None] | None = None,
                  ) -> BenchReport:
    """Run every dataset, stream rows, and aggregate.

    ``workers`` processes share the work; results are identical for any
    worker count.  With ``resume`` an interrupted run restarts after the
    last complete row of an existing row file.
    """
    from . import __version__

    t0 = time.monotonic()
    if workers is None:
        workers = multiprocessing.cpu_count()
    rows_path = report_path = table_path = None
    rows: list[DatasetRow] = []
    fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows_path = out_dir / "rows.ndjson"
        report_path = out_dir / "report.json"
        table_path = out_dir / "table.tsv"
        if resume:
            rows = _load_existing_rows(rows_path, config)
        rows_path.with_suffix(".meta.json").write_text(json.dumps(
            {"config": config.to_json(), "version": __version__}, indent=2) + "\n")
        mode = "a" if rows else "w"
        fh = open(rows_path, mode)
    try:
        todo = range(len(rows), config.n_datasets)
        if todo:
            warm_kernels()

        def emit(row: DatasetRow):
            rows.append(row)
            if fh is not None:
                fh.write(json.dumps(row.to_json(), separators=(",", ":")) + "\n")
                fh.flush()
            if progress is not None:
                progress(len(rows), config.n_datasets)

        if workers <= 1 or len(todo) <= 1:
            for i in todo:
                emit(run_single_dataset(i, config))
        else:
            try:
                ctx = multiprocessing.get_context("fork")
            except ValueError:  # pragma: no cover
                ctx = multiprocessing.get_context("spawn")
            with ctx.Pool(workers, initializer=_worker_init,
                          initargs=(config,)) as pool:
                for doc in pool.imap(_worker_run, todo, chunksize=1):
                    emit(DatasetRow.from_json(doc))
    finally:
        if fh is not None:
            fh.close()
    report = aggregate(rows)
    report = dataclasses.replace(
        report,
        config=config.to_json(),
        meta={"version": __version__, "master_seed": config.master_seed,
              "preset": config.preset, "wall_clock_s": time.monotonic() - t0,
              "workers": workers})
    if out_dir is not None:
        report_path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
        table_path.write_text(format_table(report))
    return report


def read_rows(path: str | Path) -> list[DatasetRow]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            rows.append(DatasetRow.from_json(json.loads(line)))
    return rows

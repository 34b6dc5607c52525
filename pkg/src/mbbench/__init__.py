"""Markov-blanket predictor selection benchmark on simulated causal graphs."""

__version__ = "0.1.0"

from .graph import (Dag, connected_component, d_separated, d_separated_moral,
                    dag_from_edges, is_acyclic, markov_blanket, read_dag_json,
                    topological_order, validate_acyclic, write_dag_json)
from .scm import (Dataset, ExogenousSpec, Scm, random_dag, read_scm_json,
                  sample_scm, shift_exogenous, simulate_dataset, write_scm_json)
from .calibration import (IciOutcome, SmootherConfig, cv_evaluate, cv_ici, ici,
                          kfold_split, loess_smooth)
from .bench import (BenchConfig, BenchReport, DatasetRow, aggregate,
                    lasso_selected_exactly_mb, predictor_sets, preset_config,
                    run_benchmark, run_single_dataset)
from .transport import (TransportReport, TwoNodeSpec, analytic_posterior,
                        run_anticausal_shift_experiment,
                        run_causal_shift_experiment)

__all__ = [
    "__version__",
    "Dag", "connected_component", "d_separated", "d_separated_moral",
    "dag_from_edges", "is_acyclic", "markov_blanket", "read_dag_json",
    "topological_order", "validate_acyclic", "write_dag_json",
    "Dataset", "ExogenousSpec", "Scm", "random_dag", "read_scm_json",
    "sample_scm", "shift_exogenous", "simulate_dataset", "write_scm_json",
    "IciOutcome", "SmootherConfig", "cv_evaluate", "cv_ici", "ici",
    "kfold_split", "loess_smooth",
    "BenchConfig", "BenchReport", "DatasetRow", "aggregate",
    "lasso_selected_exactly_mb", "predictor_sets", "preset_config",
    "run_benchmark", "run_single_dataset",
    "TransportReport", "TwoNodeSpec", "analytic_posterior",
    "run_anticausal_shift_experiment", "run_causal_shift_experiment",
]

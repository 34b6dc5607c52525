"""Deterministic random-stream derivation.

Every stochastic step in the package draws from a PCG64 generator whose
seed is the tuple of integers that names the step, e.g.
``(master_seed, dataset_index, STREAM_DATA)``.  Streams are therefore
independent of execution order and of how work is distributed over
processes: a dataset's results depend only on ``(config, master_seed,
index)``.

Per-fold and per-tree substreams are derived with ``Generator.spawn``,
which advances a spawn counter on the underlying ``SeedSequence`` and
never consumes draws from the parent stream.
"""

import numpy as np

# Stream purposes within one benchmark dataset.  New purposes must be
# appended, never renumbered, or previously published seeds change meaning.
STREAM_DAG = 0
STREAM_OUTCOME = 1
STREAM_SCM = 2
STREAM_DATA = 3
STREAM_FOLDS = 4
STREAM_TOOL_BASE = 100  # + tool position in the tool table


def substream(*key: int) -> np.random.Generator:
    """Return a fresh PCG64 generator keyed by a tuple of integers."""
    if not key:
        raise ValueError("substream key must contain at least one integer")
    return np.random.default_rng(tuple(int(k) for k in key))


def stream_label(*key: int) -> str:
    """Human-readable identifier of a stream, stored in output artifacts."""
    return "/".join(str(int(k)) for k in key)

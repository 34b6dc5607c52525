"""Random forest classifier: bagged, fully-grown Gini trees.

Each tree grows on a bootstrap resample (drawn with replacement, by row
position); at every node ``mtry`` features are sampled without
replacement and the best split is the Gini-impurity minimizer over the
midpoints of sorted distinct values, ties resolved to the lowest feature
index and then the lowest threshold.  Nodes split until pure, until they
reach ``min_node_size`` rows, or until every sampled feature is constant.
A tree votes its leaf's majority class (ties vote 0) and the predicted
probability is the fraction of trees voting 1.

Determinism contract: all randomness (per-tree seeds, bootstrap
positions, feature draws) derives from the generator passed to
:func:`fit_random_forest`, and the in-kernel splitmix64 stream consumes
the bootstrap draws before looking at any data, so identical
(X, y, config, stream) gives a bit-identical forest and the sequence of
bootstrap row positions does not depend on the data content at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import ColumnMismatch, DegenerateOutcome, LengthMismatch


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 1000
    mtry: int | None = None          # default floor(sqrt(p))
    min_node_size: int = 1
    sample_size: int | None = None   # bootstrap draws per tree; default n

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")


@njit(cache=True)
def _next64(state):
    # splitmix64; state is a length-1 uint64 array
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _fill_bootstrap(seed, size, n, out):
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    for i in range(size):
        out[i] = int(_next64(state) % np.uint64(n))


@njit(cache=True)
def _qsort_pairs(val, lab, lo0, hi0, stack):
    """Sort val[lo0..hi0] ascending, carrying lab along."""
    top = 0
    stack[top] = lo0
    stack[top + 1] = hi0
    top += 2
    while top > 0:
        top -= 2
        lo = stack[top]
        hi = stack[top + 1]
        while hi - lo > 16:
            mid = (lo + hi) >> 1
            if val[mid] < val[lo]:
                val[lo], val[mid] = val[mid], val[lo]
                lab[lo], lab[mid] = lab[mid], lab[lo]
            if val[hi] < val[lo]:
                val[lo], val[hi] = val[hi], val[lo]
                lab[lo], lab[hi] = lab[hi], lab[lo]
            if val[hi] < val[mid]:
                val[mid], val[hi] = val[hi], val[mid]
                lab[mid], lab[hi] = lab[hi], lab[mid]
            pivot = val[mid]
            i = lo
            j = hi
            while i <= j:
                while val[i] < pivot:
                    i += 1
                while val[j] > pivot:
                    j -= 1
                if i <= j:
                    val[i], val[j] = val[j], val[i]
                    lab[i], lab[j] = lab[j], lab[i]
                    i += 1
                    j -= 1
            if j - lo < hi - i:
                if i < hi:
                    stack[top] = i
                    stack[top + 1] = hi
                    top += 2
                hi = j
            else:
                if lo < j:
                    stack[top] = lo
                    stack[top + 1] = j
                    top += 2
                lo = i
        # insertion sort for the remaining short run
        for a in range(lo + 1, hi + 1):
            v = val[a]
            t = lab[a]
            b = a - 1
            while b >= lo and val[b] > v:
                val[b + 1] = val[b]
                lab[b + 1] = lab[b]
                b -= 1
            val[b + 1] = v
            lab[b + 1] = t


@njit(cache=True)
def _build_tree(XT, y, seed, mtry, min_node_size, sample_size,
                idx, val, lab, perm, sstack, qstack,
                feat, thr, left, right, vote):
    """Grow one tree into the output arrays; returns the node count."""
    p, n = XT.shape
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    for i in range(sample_size):
        idx[i] = int(_next64(state) % np.uint64(n))
    nn = 1
    top = 0
    sstack[top] = 0
    sstack[top + 1] = 0
    sstack[top + 2] = sample_size
    top += 3
    while top > 0:
        top -= 3
        node = sstack[top]
        s = sstack[top + 1]
        e = sstack[top + 2]
        m = e - s
        c1 = 0
        for t in range(s, e):
            c1 += y[idx[t]]
        c0 = m - c1
        if m <= min_node_size or c1 == 0 or c0 == 0:
            feat[node] = -1
            vote[node] = 1 if c1 > c0 else 0
            continue
        for j in range(p):
            perm[j] = j
        kf = mtry if mtry < p else p
        for t in range(kf):
            r = t + int(_next64(state) % np.uint64(p - t))
            perm[t], perm[r] = perm[r], perm[t]
        for a in range(1, kf):  # ascending feature order for tie-breaking
            v = perm[a]
            b = a - 1
            while b >= 0 and perm[b] > v:
                perm[b + 1] = perm[b]
                b -= 1
            perm[b + 1] = v
        best_score = -1.0
        best_f = -1
        best_thr = 0.0
        for fi in range(kf):
            f = perm[fi]
            for t in range(m):
                val[t] = XT[f, idx[s + t]]
                lab[t] = y[idx[s + t]]
            _qsort_pairs(val, lab, 0, m - 1, qstack)
            c1l = 0
            for t in range(m - 1):
                c1l += lab[t]
                if val[t] < val[t + 1]:
                    nl = t + 1
                    nr = m - nl
                    c0l = nl - c1l
                    c1r = c1 - c1l
                    c0r = c0 - c0l
                    score = ((c0l * c0l + c1l * c1l) / nl
                             + (c0r * c0r + c1r * c1r) / nr)
                    if score > best_score:
                        best_score = score
                        best_f = f
                        best_thr = (val[t] + val[t + 1]) * 0.5
        if best_f < 0:
            feat[node] = -1
            vote[node] = 1 if c1 > c0 else 0
            continue
        i = s
        j = e - 1
        while i <= j:
            if XT[best_f, idx[i]] <= best_thr:
                i += 1
            else:
                idx[i], idx[j] = idx[j], idx[i]
                j -= 1
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = nn
        right[node] = nn + 1
        sstack[top] = nn
        sstack[top + 1] = s
        sstack[top + 2] = i
        top += 3
        sstack[top] = nn + 1
        sstack[top + 1] = i
        sstack[top + 2] = e
        top += 3
        nn += 2
    return nn


@njit(cache=True)
def _forest_votes(X, feat, thr, left, right, vote, offsets, out):
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    for i in range(n):
        s = 0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while feat[base + node] >= 0:
                if X[i, feat[base + node]] <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            s += vote[base + node]
        out[i] = s / n_trees


@dataclass(frozen=True)
class ForestModel:
    n_features: int
    n_trees: int
    feat: np.ndarray      # int32, -1 marks a leaf
    thr: np.ndarray       # float64
    left: np.ndarray      # int32
    right: np.ndarray     # int32
    vote: np.ndarray      # uint8, leaf majority class
    offsets: np.ndarray   # int64, per-tree start, length n_trees+1

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise ColumnMismatch(
                f"forest was grown on {self.n_features} columns, got {X.shape[1]}")
        out = np.empty(X.shape[0])
        _forest_votes(X, self.feat, self.thr, self.left, self.right,
                      self.vote, self.offsets, out)
        return out


def bootstrap_indices(seed: int, n: int, size: int) -> np.ndarray:
    """The bootstrap row positions a tree with this seed will use."""
    out = np.empty(size, dtype=np.int64)
    _fill_bootstrap(np.uint64(seed), size, n, out)
    return out


def tree_seeds(rng: np.random.Generator, n_trees: int) -> np.ndarray:
    """One substream seed per tree index, drawn before any data is seen."""
    return rng.integers(0, 2 ** 63, size=n_trees, dtype=np.int64).astype(np.uint64)


def fit_random_forest(X: np.ndarray, y: np.ndarray,
                      config: ForestConfig = ForestConfig(),
                      rng: np.random.Generator | None = None) -> ForestModel:
    if rng is None:
        raise ValueError("rng is required")
    X = np.ascontiguousarray(X, dtype=np.float64)
    yv = np.asarray(y)
    if X.shape[0] != yv.shape[0]:
        raise LengthMismatch("X rows and y length differ")
    n, p = X.shape
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 rows and p >= 1 columns")
    yb = yv.astype(np.uint8)
    if yb.min() == yb.max():
        raise DegenerateOutcome("outcome vector is constant")
    mtry = config.mtry if config.mtry is not None else max(1, int(np.sqrt(p)))
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must be in 1..{p}, got {mtry}")
    size = config.sample_size if config.sample_size is not None else n
    seeds = tree_seeds(rng, config.n_trees)
    XT = np.ascontiguousarray(X.T)
    cap = 2 * size + 1
    idx = np.empty(size, dtype=np.int64)
    val = np.empty(size, dtype=np.float64)
    lab = np.empty(size, dtype=np.uint8)
    perm = np.empty(p, dtype=np.int64)
    sstack = np.empty(3 * (size + 4), dtype=np.int64)
    qstack = np.empty(160, dtype=np.int64)
    feat = np.empty(cap, dtype=np.int32)
    thr = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int32)
    right = np.empty(cap, dtype=np.int32)
    vote = np.empty(cap, dtype=np.uint8)
    feats, thrs, lefts, rights, votes = [], [], [], [], []
    offsets = np.empty(config.n_trees + 1, dtype=np.int64)
    offsets[0] = 0
    for t in range(config.n_trees):
        nn = _build_tree(XT, yb, seeds[t], mtry, config.min_node_size, size,
                         idx, val, lab, perm, sstack, qstack,
                         feat, thr, left, right, vote)
        feats.append(feat[:nn].copy())
        thrs.append(thr[:nn].copy())
        lefts.append(left[:nn].copy())
        rights.append(right[:nn].copy())
        votes.append(vote[:nn].copy())
        offsets[t + 1] = offsets[t] + nn
    return ForestModel(p, config.n_trees,
                       np.concatenate(feats), np.concatenate(thrs),
                       np.concatenate(lefts), np.concatenate(rights),
                       np.concatenate(votes), offsets)

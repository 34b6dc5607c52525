"""Directed acyclic graphs over integer-indexed nodes.

Nodes are identified by their index ``0..node_count-1``; labels (and the
per-node kind used by the file format) are metadata.  The adjacency is
stored as one parent set per node because every consumer here is
parent-centric: ancestral sampling, Markov blankets, d-separation.

Graphs are immutable after construction and all operations are pure, so
instances can be shared freely across threads.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CycleFound, IndexOutOfRange, OverlappingArguments, UnknownNode

KIND_CONTINUOUS = "continuous"
KIND_BINARY = "binary"

_VALID_KINDS = (KIND_CONTINUOUS, KIND_BINARY)


@dataclass(frozen=True)
class Dag:
    """Directed graph with per-node parent sets.

    Construction checks self-edges, index ranges and label uniqueness but
    *not* acyclicity; call :func:`validate_acyclic` (or anything that needs
    a topological order) to establish that.
    """

    labels: tuple[str, ...]
    parent_sets: tuple[frozenset[int], ...]
    kinds: tuple[str, ...] | None = None
    child_sets: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.labels)
        if n == 0:
            raise ValueError("a Dag needs at least one node")
        if len(self.parent_sets) != n:
            raise ValueError("parent_sets and labels must have equal length")
        if len(set(self.labels)) != n:
            raise ValueError("node labels must be unique")
        if self.kinds is not None:
            if len(self.kinds) != n:
                raise ValueError("kinds and labels must have equal length")
            for k in self.kinds:
                if k not in _VALID_KINDS:
                    raise ValueError(f"unknown node kind {k!r}")
        children: list[set[int]] = [set() for _ in range(n)]
        for v, parents in enumerate(self.parent_sets):
            for u in parents:
                if not 0 <= u < n:
                    raise IndexOutOfRange(f"parent index {u} out of range for {n} nodes")
                if u == v:
                    raise ValueError(f"self-edge on node {v}")
                children[u].add(v)
        object.__setattr__(self, "child_sets", tuple(frozenset(c) for c in children))

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return sum(len(p) for p in self.parent_sets)

    def parents(self, v: int) -> frozenset[int]:
        self._check_index(v)
        return self.parent_sets[v]

    def children(self, v: int) -> frozenset[int]:
        self._check_index(v)
        return self.child_sets[v]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield (parent, child) pairs, sorted by child then parent."""
        for v, parents in enumerate(self.parent_sets):
            for u in sorted(parents):
                yield (u, v)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownNode(label) from None

    def _check_index(self, v: int) -> None:
        if not 0 <= v < self.node_count:
            raise IndexOutOfRange(f"node index {v} out of range for {self.node_count} nodes")


def dag_from_edges(labels: Iterable[str], edges: Iterable[tuple[int, int]],
                   kinds: Iterable[str] | None = None) -> Dag:
    labels = tuple(labels)
    parents: list[set[int]] = [set() for _ in labels]
    for u, v in edges:
        if not 0 <= v < len(labels):
            raise IndexOutOfRange(f"edge target {v} out of range")
        parents[v].add(u)
    return Dag(labels, tuple(frozenset(p) for p in parents),
               tuple(kinds) if kinds is not None else None)


def _find_cycle(dag: Dag, candidates: Iterable[int]) -> list[int]:
    """Return the node indices along one directed cycle among ``candidates``."""
    candidates = set(candidates)
    color: dict[int, int] = {}  # 1 = on stack, 2 = done
    for start in sorted(candidates):
        if color.get(start):
            continue
        stack = [(start, iter(sorted(dag.child_sets[start])))]
        color[start] = 1
        path = [start]
        while stack:
            node, it = stack[-1]
            advanced = False
            for child in it:
                if child not in candidates:
                    continue
                if color.get(child) == 1:
                    return path[path.index(child):]
                if not color.get(child):
                    color[child] = 1
                    path.append(child)
                    stack.append((child, iter(sorted(dag.child_sets[child]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                path.pop()
                stack.pop()
    raise AssertionError("no cycle among candidate nodes")  # pragma: no cover


def topological_order(dag: Dag) -> list[int]:
    """Kahn's algorithm with ascending-index tie-breaking.

    Raises :class:`CycleFound` (naming one cycle) if the graph is cyclic.
    """
    in_deg = [len(p) for p in dag.parent_sets]
    ready = [v for v, d in enumerate(in_deg) if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in dag.child_sets[v]:
            in_deg[c] -= 1
            if in_deg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != dag.node_count:
        leftover = [v for v, d in enumerate(in_deg) if d > 0]
        raise CycleFound(_find_cycle(dag, leftover))
    return order


def validate_acyclic(dag: Dag) -> None:
    """Raise :class:`CycleFound` unless the edge relation is acyclic."""
    topological_order(dag)


def is_acyclic(dag: Dag) -> bool:
    try:
        validate_acyclic(dag)
        return True
    except CycleFound:
        return False


def markov_blanket(dag: Dag, y: int) -> frozenset[int]:
    """Parents, children, and parents-of-children of ``y`` (excluding ``y``)."""
    dag._check_index(y)
    blanket = set(dag.parent_sets[y]) | set(dag.child_sets[y])
    for child in dag.child_sets[y]:
        blanket |= dag.parent_sets[child]
    blanket.discard(y)
    return frozenset(blanket)


def connected_component(dag: Dag, y: int) -> frozenset[int]:
    """All nodes reachable from ``y`` in the undirected skeleton, minus ``y``."""
    dag._check_index(y)
    seen = {y}
    queue = deque([y])
    while queue:
        v = queue.popleft()
        for u in dag.parent_sets[v] | dag.child_sets[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    seen.discard(y)
    return frozenset(seen)


def ancestors(dag: Dag, nodes: Iterable[int]) -> set[int]:
    """All strict-and-non-strict ancestors of ``nodes`` (includes the nodes)."""
    result = set()
    queue = deque(nodes)
    while queue:
        v = queue.popleft()
        if v in result:
            continue
        result.add(v)
        queue.extend(dag.parent_sets[v])
    return result


def _check_dsep_args(dag: Dag, a: int, b: int, z: frozenset[int]) -> None:
    dag._check_index(a)
    dag._check_index(b)
    for v in z:
        dag._check_index(v)
    if a == b or a in z or b in z:
        raise OverlappingArguments(
            f"query nodes {a},{b} must be distinct and disjoint from the conditioning set")


def d_separated(dag: Dag, a: int, b: int, z: Iterable[int]) -> bool:
    """Whether every path between ``a`` and ``b`` is blocked given ``z``.

    Ball-passing reachability over (node, direction) states: a path segment
    may continue through an unobserved chain/fork, and through a collider
    only if the collider has an observed descendant.
    """
    z = frozenset(z)
    _check_dsep_args(dag, a, b, z)
    an_z = ancestors(dag, z) if z else set()

    # direction True: entered v against an edge (from a child, moving up);
    # direction False: entered v along an edge (from a parent).
    visited: set[tuple[int, bool]] = set()
    queue: deque[tuple[int, bool]] = deque([(a, True)])
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == b:
            return False
        if up:
            if v not in z:
                for p in dag.parent_sets[v]:
                    queue.append((p, True))
                for c in dag.child_sets[v]:
                    queue.append((c, False))
        else:
            if v not in z:
                for c in dag.child_sets[v]:
                    queue.append((c, False))
            if v in an_z:
                for p in dag.parent_sets[v]:
                    queue.append((p, True))
    return True


def d_separated_moral(dag: Dag, a: int, b: int, z: Iterable[int]) -> bool:
    """d-separation decided by moralizing the ancestral subgraph.

    Independent route used to cross-check :func:`d_separated`: restrict to
    ancestors of {a,b} union z, marry co-parents, drop directions, delete z,
    and test undirected connectivity.
    """
    z = frozenset(z)
    _check_dsep_args(dag, a, b, z)
    keep = ancestors(dag, {a, b} | z)
    adj: dict[int, set[int]] = {v: set() for v in keep}
    for v in keep:
        ps = [p for p in dag.parent_sets[v] if p in keep]
        for p in ps:
            adj[v].add(p)
            adj[p].add(v)
        for i, p in enumerate(ps):
            for q in ps[i + 1:]:
                adj[p].add(q)
                adj[q].add(p)
    seen = {a}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        if v == b:
            return False
        for u in adj[v]:
            if u not in seen and u not in z:
                seen.add(u)
                queue.append(u)
    return True


# -- file format --------------------------------------------------------

def dag_to_dict(dag: Dag) -> dict:
    kinds = dag.kinds or tuple(KIND_CONTINUOUS for _ in dag.labels)
    return {
        "nodes": [{"name": name, "kind": kind} for name, kind in zip(dag.labels, kinds)],
        "edges": [[dag.labels[u], dag.labels[v]] for u, v in dag.edges()],
    }


def dag_from_dict(doc: dict) -> Dag:
    try:
        nodes = doc["nodes"]
        raw_edges = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise ValueError("document must contain 'nodes' and 'edges'") from exc
    labels = tuple(str(n["name"]) for n in nodes)
    kinds = tuple(str(n.get("kind", KIND_CONTINUOUS)) for n in nodes)
    index = {name: i for i, name in enumerate(labels)}
    if len(index) != len(labels):
        raise ValueError("node names must be unique")
    edges = []
    for pair in raw_edges:
        u_name, v_name = pair
        if u_name not in index:
            raise UnknownNode(u_name)
        if v_name not in index:
            raise UnknownNode(v_name)
        edges.append((index[u_name], index[v_name]))
    return dag_from_edges(labels, edges, kinds)


def write_dag_json(dag: Dag, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dag_to_dict(dag), indent=2) + "\n")


def read_dag_json(path: str | Path) -> Dag:
    return dag_from_dict(json.loads(Path(path).read_text()))

"""Affine Unique Games instances over Z_q, exact values, oracles, and generators.

An instance is a weighted graph plus one shift b_e per edge; the constraint on
(u, v) is x(u) - x(v) = b_e (mod q).  Weights are exact rationals (uniform
1/|E| for regular graphs); values are computed as exact edge counts where
possible and only aggregated in floating point.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .johnson import JohnsonGraph, build as build_johnson

Assignment = np.ndarray  # int array of length vertex_count with entries in {0..q-1}

BRUTE_FORCE_BUDGET = 2_000_000


class EnumerationBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlantedSpec:
    epsilon: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


@dataclass(frozen=True)
class UGInstance:
    vertex_count: int
    q: int
    edges: tuple[tuple[int, int, int], ...]          # (u, v, shift) with u < v
    weights: tuple[Fraction, ...]
    graph_tag: Optional[JohnsonGraph] = field(default=None, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("alphabet size must be >= 2")
        for (u, v, b) in self.edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            if not u < v:
                raise ValueError("edges must be canonically oriented u < v")
            if not 0 <= b < self.q:
                raise ValueError("shift out of range")
        if sum(self.weights, Fraction(0)) != 1:
            raise ValueError("edge weights must sum to 1")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def uniform_weights(self) -> bool:
        return len(set(self.weights)) == 1

    def edge_array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64)

    def weight_array(self) -> np.ndarray:
        return np.asarray([float(w) for w in self.weights])

    def incident(self, u: int) -> list[int]:
        return [k for k, (a, b, _) in enumerate(self.edges) if u in (a, b)]


def from_graph(graph: JohnsonGraph, q: int, shifts: Sequence[int],
               metadata: Optional[dict] = None) -> UGInstance:
    edges = graph.edges()
    if len(shifts) != len(edges):
        raise ValueError("one shift per edge required")
    m = len(edges)
    w = tuple([Fraction(1, m)] * m)
    e = tuple((u, v, int(s) % q) for (u, v), s in zip(edges, shifts))
    return UGInstance(graph.num_vertices, q, e, w, graph_tag=graph,
                      metadata=dict(metadata or {}))


def satisfied_mask(inst: UGInstance, x: Assignment) -> np.ndarray:
    e = inst.edge_array()
    return (x[e[:, 0]] - x[e[:, 1]] - e[:, 2]) % inst.q == 0


def value(inst: UGInstance, x: Assignment) -> float:
    """Weighted fraction of edges with x(u) - x(v) = b_e (mod q)."""
    sat = satisfied_mask(inst, x)
    if inst.uniform_weights:
        return int(np.count_nonzero(sat)) / inst.num_edges
    return float(np.dot(sat.astype(float), inst.weight_array()))


def vertex_value(inst: UGInstance, x: Assignment, u: int) -> float:
    """Fraction (by weight) of edges incident on u that x satisfies."""
    idx = inst.incident(u)
    if not idx:
        return 0.0
    sat = satisfied_mask(inst, x)
    w = inst.weight_array()
    return float(np.dot(sat[idx], w[idx]) / np.sum(w[idx]))


def value_and(inst: UGInstance, x: Assignment, xp: Assignment) -> float:
    """Fraction of edges satisfied simultaneously by x and x'."""
    sat = satisfied_mask(inst, x) & satisfied_mask(inst, xp)
    if inst.uniform_weights:
        return int(np.count_nonzero(sat)) / inst.num_edges
    return float(np.dot(sat.astype(float), inst.weight_array()))


def vertex_value_and(inst: UGInstance, x: Assignment, xp: Assignment, u: int,
                     within: Optional[set] = None) -> float:
    """Per-vertex both-satisfied fraction; `within` restricts to edges inside a vertex set."""
    idx = inst.incident(u)
    if within is not None:
        idx = [k for k in idx if inst.edges[k][0] in within and inst.edges[k][1] in within]
    if not idx:
        return 0.0
    sat = satisfied_mask(inst, x) & satisfied_mask(inst, xp)
    w = inst.weight_array()
    return float(np.dot(sat[idx], w[idx]) / np.sum(w[idx]))


def brute_force_opt(inst: UGInstance, budget: int = BRUTE_FORCE_BUDGET
                    ) -> tuple[Assignment, float]:
    """Exact maximizer by enumeration, fixing vertex 0's label to 0 (shift symmetry)."""
    n, q = inst.vertex_count, inst.q
    total = q ** (n - 1)
    if total > budget:
        raise EnumerationBudgetError(
            f"{q}^{n-1} = {total} assignments exceed the budget {budget}")
    e = inst.edge_array()
    w = inst.weight_array()
    best_val, best_x = -1.0, None
    batch = []
    batch_size = max(1, min(total, 200_000 // max(n, 1)))

    def flush(batch_list, best_val, best_x):
        X = np.asarray(batch_list, dtype=np.int64)
        sat = (X[:, e[:, 0]] - X[:, e[:, 1]] - e[None, :, 2]) % q == 0
        vals = sat @ w
        k = int(np.argmax(vals))
        if vals[k] > best_val + 1e-15:
            return float(vals[k]), X[k].copy()
        return best_val, best_x

    for rest in itertools.product(range(q), repeat=n - 1):
        batch.append((0,) + rest)
        if len(batch) >= batch_size:
            best_val, best_x = flush(batch, best_val, best_x)
            batch = []
    if batch:
        best_val, best_x = flush(batch, best_val, best_x)
    # exact rational value at the winner when weights are uniform
    if inst.uniform_weights:
        best_val = value(inst, best_x)
    return best_x, best_val


def plant(graph: JohnsonGraph, q: int, spec: PlantedSpec) -> tuple[UGInstance, Assignment]:
    """Planted instance: b_e = A(u) - A(v) with an independently chosen eps-fraction
    of edges re-randomized to fresh uniform shifts.  A corrupted edge can still be
    satisfied with probability 1/q; the realized completeness is recorded."""
    rng = np.random.default_rng(spec.seed)
    edges = graph.edges()
    A = rng.integers(0, q, size=graph.num_vertices)
    shifts = [(int(A[u]) - int(A[v])) % q for (u, v) in edges]
    corrupted = rng.random(len(edges)) < spec.epsilon
    fresh = rng.integers(0, q, size=len(edges))
    n_bad = 0
    for k in range(len(edges)):
        if corrupted[k]:
            if int(fresh[k]) != shifts[k]:
                n_bad += 1
            shifts[k] = int(fresh[k])
    realized = 1.0 - n_bad / len(edges)
    meta = {
        "graph": {"kind": "johnson", "n": graph.n, "l": graph.ell, "t": graph.t},
        "planted": {"epsilon": spec.epsilon, "seed": spec.seed, "realized_value": realized},
    }
    inst = from_graph(graph, q, shifts, metadata=meta)
    assert abs(value(inst, A) - realized) < 1e-12
    return inst, A


def randomize_edges(inst: UGInstance, S: Sequence[int], seed: int) -> UGInstance:
    """Fresh uniform shift on every edge with at least one endpoint in S."""
    S = set(S)
    rng = np.random.default_rng(seed)
    new_edges = []
    touched = []
    for k, (u, v, b) in enumerate(inst.edges):
        if u in S or v in S:
            new_edges.append((u, v, int(rng.integers(0, inst.q))))
            touched.append(k)
        else:
            new_edges.append((u, v, b))
    meta = dict(inst.metadata)
    meta["randomized_edges"] = meta.get("randomized_edges", 0) + len(touched)
    return UGInstance(inst.vertex_count, inst.q, tuple(new_edges), inst.weights,
                      graph_tag=inst.graph_tag, metadata=meta)


# ---------------------------------------------------------------------------
# instance file format


def to_json_dict(inst: UGInstance) -> dict:
    return {
        "n_vertices": inst.vertex_count,
        "q": inst.q,
        "edges": [[u, v, b, float(w)] for (u, v, b), w in zip(inst.edges, inst.weights)],
        "metadata": inst.metadata,
    }


def save(inst: UGInstance, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(inst), fh, indent=1, sort_keys=True)


def load(path: str) -> UGInstance:
    with open(path) as fh:
        d = json.load(fh)
    edges = tuple((int(u), int(v), int(b)) for u, v, b, _ in d["edges"])
    wfloats = [w for _, _, _, w in d["edges"]]
    if len(set(wfloats)) == 1:
        weights = tuple([Fraction(1, len(edges))] * len(edges))
    else:
        weights = tuple(Fraction(w).limit_denominator(10 ** 9) for w in wfloats)
        weights = tuple(w / sum(weights) for w in weights)
    tag = None
    g = d.get("metadata", {}).get("graph")
    if g and g.get("kind") == "johnson":
        tag = build_johnson(g["n"], g["l"], g["t"] / g["l"])
    return UGInstance(int(d["n_vertices"]), int(d["q"]), edges, weights,
                      graph_tag=tag, metadata=d.get("metadata", {}))

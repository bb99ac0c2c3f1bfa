"""DAG hypotheses: representation, random generation, perturbation, Hamming metrics.

A causal hypothesis is a binary adjacency matrix ``A`` (entry ``(i, j) = 1``
iff variable ``i`` is a parent of variable ``j``) plus a diagonal exogeneity
mask ``D``.  The effective input mask of the downstream models is ``S = A + D``;
column ``i`` of ``S`` selects the inputs of the network that reconstructs
variable ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CycleError, InfeasibleTargetError, InvalidArgumentError


def _default_names(d: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(d))


def _toposort(entries: np.ndarray) -> list[int]:
    """Kahn's algorithm over an adjacency matrix; raises CycleError on failure.

    Deterministic: among ready nodes the smallest index is emitted first.
    """
    d = entries.shape[0]
    indeg = entries.sum(axis=0).astype(int)
    ready = sorted(i for i in range(d) if indeg[i] == 0)
    order: list[int] = []
    while ready:
        u = ready.pop(0)
        order.append(u)
        changed = False
        for v in range(d):
            if entries[u, v]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
                    changed = True
        if changed:
            ready.sort()
    if len(order) < d:
        raise CycleError(_find_cycle(entries))
    return order


def _find_cycle(entries: np.ndarray) -> list[int]:
    """Return one directed cycle as a node list (first node repeated last)."""
    d = entries.shape[0]
    color = [0] * d  # 0 unvisited, 1 on stack, 2 done
    stack: list[int] = []

    def dfs(u: int) -> list[int] | None:
        color[u] = 1
        stack.append(u)
        for v in range(d):
            if not entries[u, v]:
                continue
            if color[v] == 1:
                i = stack.index(v)
                return stack[i:] + [v]
            if color[v] == 0:
                found = dfs(v)
                if found:
                    return found
        stack.pop()
        color[u] = 2
        return None

    for s in range(d):
        if color[s] == 0:
            cyc = dfs(s)
            if cyc:
                return cyc
    raise AssertionError("no cycle found in a graph that failed toposort")


@dataclass(frozen=True, eq=False)
class Adjacency:
    """Binary acyclic adjacency matrix with named nodes.

    Invariants (checked on construction): square 0/1 matrix, zero diagonal,
    acyclic.
    """

    entries: np.ndarray
    node_names: tuple[str, ...] = ()

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int8)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidArgumentError(f"adjacency must be square, got shape {entries.shape}")
        if not np.isin(entries, (0, 1)).all():
            raise InvalidArgumentError("adjacency entries must be 0/1")
        if entries.diagonal().any():
            raise InvalidArgumentError("adjacency diagonal must be zero")
        names = self.node_names or _default_names(entries.shape[0])
        if len(names) != entries.shape[0]:
            raise InvalidArgumentError("node_names length must match matrix size")
        if len(set(names)) != len(names):
            raise InvalidArgumentError("node names must be unique")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "node_names", tuple(names))
        _toposort(entries)  # raises CycleError if cyclic

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.entries.sum())

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.entries))]

    @classmethod
    def from_edges(cls, d: int, edges: Iterable[tuple[int, int]],
                   node_names: Sequence[str] = ()) -> "Adjacency":
        m = np.zeros((d, d), dtype=np.int8)
        for i, j in edges:
            m[i, j] = 1
        return cls(m, tuple(node_names))


@dataclass(frozen=True, eq=False)
class ExoMask:
    """Diagonal 0/1 mask; 1 marks a variable fed back to its own network."""

    diag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=np.int8).reshape(-1)
        if not np.isin(diag, (0, 1)).all():
            raise InvalidArgumentError("exogeneity mask entries must be 0/1")
        diag.setflags(write=False)
        object.__setattr__(self, "diag", diag)

    @property
    def d(self) -> int:
        return self.diag.shape[0]


@dataclass(frozen=True, eq=False)
class StructuralPrior:
    """Adjacency plus exogeneity mask; the model input mask is ``A + D``.

    By convention an exogenous variable has no parents.  A prior that gives an
    exogenous variable incoming edges (a pure leakage term) must be built with
    ``allow_exo_parents=True``.
    """

    adjacency: Adjacency
    exo: ExoMask
    allow_exo_parents: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.exo.d != self.adjacency.d:
            raise InvalidArgumentError("exogeneity mask size must match adjacency")
        if not self.allow_exo_parents:
            in_deg = self.adjacency.entries.sum(axis=0)
            bad = np.nonzero((self.exo.diag == 1) & (in_deg > 0))[0]
            if bad.size:
                names = [self.adjacency.node_names[i] for i in bad]
                raise InvalidArgumentError(
                    f"exogenous nodes with parents require allow_exo_parents=True: {names}"
                )

    @property
    def d(self) -> int:
        return self.adjacency.d

    def mask(self) -> np.ndarray:
        """The effective 0/1 input-selection matrix ``S = A + D``."""
        s = self.adjacency.entries.astype(np.int8) + np.diag(self.exo.diag).astype(np.int8)
        # A has zero diagonal and D is diagonal, so no entry can exceed 1.
        return s


@dataclass(frozen=True)
class HammingTuple:
    """Edge-difference counts of a hypothesis against a reference graph."""

    h_plus: int
    h_minus: int

    def __post_init__(self):
        if self.h_plus < 0 or self.h_minus < 0:
            raise InvalidArgumentError("Hamming counts must be non-negative")

    @property
    def h_total(self) -> int:
        return self.h_plus + self.h_minus

    @property
    def h_net(self) -> int:
        return self.h_plus - self.h_minus

    def as_pair(self) -> tuple[int, int]:
        return (self.h_plus, self.h_minus)


def random_dag(d: int, m: int, rng: np.random.Generator,
               node_names: Sequence[str] = ()) -> Adjacency:
    """Sample a DAG with exactly ``m`` edges, uniform given a random node order.

    A node permutation is drawn uniformly; ``m`` of the ``d(d-1)/2`` ordered
    pairs consistent with it are chosen without replacement.
    """
    max_m = d * (d - 1) // 2
    if not 0 <= m <= max_m:
        raise InvalidArgumentError(f"edge count {m} outside [0, {max_m}] for d={d}")
    order = rng.permutation(d)
    slots = [(int(order[i]), int(order[j]))
             for i in range(d) for j in range(i + 1, d)]
    chosen = rng.choice(len(slots), size=m, replace=False) if m else []
    return Adjacency.from_edges(d, [slots[k] for k in chosen], node_names)


def topological_order(a: Adjacency) -> list[int]:
    """Node order in which every parent precedes its children."""
    return _toposort(a.entries)


def default_exo(a: Adjacency) -> ExoMask:
    """Mark parentless nodes exogenous (1) and all others endogenous (0)."""
    in_deg = a.entries.sum(axis=0)
    return ExoMask((in_deg == 0).astype(np.int8))


def hamming(a1: Adjacency, a0: Adjacency) -> HammingTuple:
    """Positive/negative edge-difference counts of ``a1`` relative to ``a0``."""
    if a1.d != a0.d:
        raise InvalidArgumentError(f"dimension mismatch: {a1.d} vs {a0.d}")
    h_plus = int(((a1.entries == 1) & (a0.entries == 0)).sum())
    h_minus = int(((a1.entries == 0) & (a0.entries == 1)).sum())
    return HammingTuple(h_plus, h_minus)


def perturb(a_gt: Adjacency, target: HammingTuple, rng: np.random.Generator,
            exo_policy: str = "recompute") -> tuple[Adjacency, ExoMask]:
    """Produce a hypothesis at exactly ``target`` Hamming distance from ``a_gt``.

    Removed edges are drawn uniformly from the existing ones.  Added edges are
    drawn uniformly from the vacant pairs consistent with a fixed topological
    order of ``a_gt``, which keeps the result acyclic by construction.

    exo_policy: "preserve" keeps the exogeneity mask of the ground truth;
    "recompute" re-derives it from the perturbed graph.
    """
    if exo_policy not in ("preserve", "recompute"):
        raise InvalidArgumentError(f"unknown exo_policy: {exo_policy!r}")
    order = topological_order(a_gt)
    pos = {node: k for k, node in enumerate(order)}
    existing = a_gt.edges()
    vacant = [(u, v) for u in range(a_gt.d) for v in range(a_gt.d)
              if u != v and pos[u] < pos[v] and not a_gt.entries[u, v]]
    if target.h_minus > len(existing) or target.h_plus > len(vacant):
        raise InfeasibleTargetError(target.as_pair(), len(vacant), len(existing))
    removed = ([existing[k] for k in rng.choice(len(existing), size=target.h_minus,
                                                replace=False)]
               if target.h_minus else [])
    added = ([vacant[k] for k in rng.choice(len(vacant), size=target.h_plus,
                                            replace=False)]
             if target.h_plus else [])
    edges = (set(existing) - set(removed)) | set(added)
    a = Adjacency.from_edges(a_gt.d, sorted(edges), a_gt.node_names)
    exo = default_exo(a_gt) if exo_policy == "preserve" else default_exo(a)
    return a, exo


def prior_to_json(prior: StructuralPrior) -> dict:
    """Serialize a prior to the on-disk hypothesis format."""
    return {
        "nodes": list(prior.adjacency.node_names),
        "edges": [[i, j] for i, j in prior.adjacency.edges()],
        "exogenous": [int(i) for i in np.nonzero(prior.exo.diag)[0]],
    }


def prior_from_json(obj: dict) -> StructuralPrior:
    """Parse the hypothesis format; node references may be indices or names.

    A file that explicitly lists an exogenous node with incoming edges is
    treated as an intentional leakage term.
    """
    try:
        nodes = list(obj["nodes"])
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError("hypothesis object must contain 'nodes'") from exc
    index = {name: k for k, name in enumerate(nodes)}

    def resolve(ref) -> int:
        if isinstance(ref, str):
            if ref not in index:
                raise InvalidArgumentError(f"unknown node name {ref!r}")
            return index[ref]
        i = int(ref)
        if not 0 <= i < len(nodes):
            raise InvalidArgumentError(f"node index {i} out of range")
        return i

    edges = [(resolve(e[0]), resolve(e[1])) for e in obj.get("edges", [])]
    adjacency = Adjacency.from_edges(len(nodes), edges, nodes)
    d = len(nodes)
    diag = np.zeros(d, dtype=np.int8)
    for ref in obj.get("exogenous", []):
        diag[resolve(ref)] = 1
    return StructuralPrior(adjacency, ExoMask(diag), allow_exo_parents=True)

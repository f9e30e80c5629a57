"""Directed multigraph networks with enumerated source-sink paths.

Paths are enumerated exhaustively at construction by DFS with cycle
rejection; instances in this problem class are tiny, so a configurable
cap (default 1e5 paths) guards against accidental blowups.  Networks are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .costs import CostFunction, cost_from_spec, cost_to_spec
from .errors import DomainError, GameError
from .logdomain import LogValue, log_sum

PATH_CAP = 100_000

FEASIBILITY_RTOL = 1e-12


class Edge(NamedTuple):
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class Network:
    """Single source-destination multigraph with per-edge cost functions."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    costs: tuple[CostFunction, ...]
    source: str
    sink: str
    paths: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if len(self.edges) != len(self.costs):
            raise DomainError("one cost function per edge is required")
        if self.source not in self.vertices or self.sink not in self.vertices:
            raise DomainError("source and sink must be listed vertices")
        for e in self.edges:
            if e.tail not in self.vertices or e.head not in self.vertices:
                raise DomainError(f"edge {e.id} references unknown vertices")
        if not self.paths:
            object.__setattr__(self, "paths", _enumerate_paths(self))
        if not self.paths:
            raise GameError(f"no {self.source}->{self.sink} path exists")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def is_parallel(self) -> bool:
        return all(e.tail == self.source and e.head == self.sink for e in self.edges)

    def path_cost(self, path_index: int, edge_flow: np.ndarray) -> float:
        return sum(self.costs[e].eval(float(edge_flow[e])) for e in self.paths[path_index])

    def path_entry_cost(self, path_index: int, edge_flow: np.ndarray) -> float:
        """Cost faced by an infinitesimal player joining the path (right limits)."""
        return sum(
            self.costs[e].eval_right(float(edge_flow[e])) for e in self.paths[path_index]
        )


def _enumerate_paths(net: Network) -> tuple[tuple[int, ...], ...]:
    out_edges: dict[str, list[int]] = {v: [] for v in net.vertices}
    for i, e in enumerate(net.edges):
        out_edges[e.tail].append(i)

    paths: list[tuple[int, ...]] = []
    stack: list[int] = []
    visited: set[str] = {net.source}

    def walk(v: str) -> None:
        if v == net.sink:
            paths.append(tuple(stack))
            if len(paths) > PATH_CAP:
                raise GameError(
                    f"path enumeration exceeded cap of {PATH_CAP}; "
                    "this solver targets small instances"
                )
            return
        for i in out_edges[v]:
            head = net.edges[i].head
            if head in visited:
                continue  # cycle rejection
            visited.add(head)
            stack.append(i)
            walk(head)
            stack.pop()
            visited.remove(head)

    walk(net.source)
    return tuple(paths)


def build_parallel(costs: list[CostFunction] | tuple[CostFunction, ...]) -> Network:
    """Two-vertex network with one parallel edge per cost function."""
    costs = tuple(costs)
    if not costs:
        raise DomainError("a parallel network needs at least one edge")
    edges = tuple(Edge(f"e{i + 1}", "s", "t") for i in range(len(costs)))
    return Network(("s", "t"), edges, costs, "s", "t")


@dataclass(frozen=True)
class FlowProfile:
    """Per-path flows summing to the total demand M."""

    path_flows: tuple[float, ...]
    total: float

    def __post_init__(self):
        flows = tuple(float(f) for f in self.path_flows)
        object.__setattr__(self, "path_flows", flows)
        if any(f < 0 for f in flows):
            raise DomainError("path flows must be nonnegative")
        s = math.fsum(flows)
        if abs(s - self.total) > FEASIBILITY_RTOL * max(abs(self.total), 1.0):
            raise DomainError(
                f"infeasible flow: sum {s!r} != total {self.total!r}"
            )

    @classmethod
    def of(cls, path_flows) -> "FlowProfile":
        flows = tuple(float(f) for f in path_flows)
        return cls(flows, math.fsum(flows))


def edge_flows(net: Network, flow: FlowProfile) -> np.ndarray:
    """x_e as the sum of flows of the paths through e."""
    if len(flow.path_flows) != net.n_paths:
        raise DomainError(
            f"flow has {len(flow.path_flows)} entries for {net.n_paths} paths"
        )
    x = np.zeros(net.n_edges)
    for p, f in zip(net.paths, flow.path_flows):
        for e in p:
            x[e] += f
    return x


def social_cost(net: Network, flow: FlowProfile) -> float:
    """Total travel cost sum_e x_e c_e(x_e) of a feasible flow."""
    x = edge_flows(net, flow)
    return math.fsum(
        float(x[e]) * net.costs[e].eval(float(x[e])) for e in range(net.n_edges)
    )


def social_cost_log(net: Network, flow: FlowProfile) -> LogValue:
    """Log-domain social cost for instances whose costs overflow floats."""
    x = edge_flows(net, flow)
    terms = []
    for e in range(net.n_edges):
        xe = float(x[e])
        if xe <= 0:
            continue
        terms.append(LogValue.from_float(xe) * net.costs[e].eval_log(xe))
    return log_sum(terms)


def social_cost_path_form(net: Network, flow: FlowProfile) -> float:
    """sum_P x_P c_P(x); agrees with the edge form (cross-check hook)."""
    x = edge_flows(net, flow)
    return math.fsum(
        f * net.path_cost(i, x) for i, f in enumerate(flow.path_flows) if f > 0
    )


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------


def network_from_spec(spec: dict) -> Network:
    try:
        vertices = tuple(str(v) for v in spec["vertices"])
        edges = []
        costs = []
        for e in spec["edges"]:
            edges.append(Edge(str(e["id"]), str(e["tail"]), str(e["head"])))
            costs.append(cost_from_spec(e["cost"]))
        return Network(
            vertices, tuple(edges), tuple(costs), str(spec["source"]), str(spec["sink"])
        )
    except KeyError as exc:
        raise DomainError(f"network spec missing field {exc}") from None


def network_to_spec(net: Network) -> dict:
    return {
        "vertices": list(net.vertices),
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, "cost": cost_to_spec(c)}
            for e, c in zip(net.edges, net.costs)
        ],
        "source": net.source,
        "sink": net.sink,
    }


def load_network(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    return network_from_spec(spec)

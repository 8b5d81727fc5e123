"""Edge-network graph: shortest paths, bottlenecks, residual bookkeeping.

The network is an undirected weighted graph. Every routing decision in this
package goes through a :class:`PathTable` built by :func:`shortest_paths`,
which breaks cost ties by the lexicographically smallest node sequence so
that solvers, heuristics, and test oracles all see identical paths.

`EdgeNetwork` and `PathTable` are immutable and safe to share across
threads. `ResidualState` is mutable and single-owner; parallel runs must
each work on their own copy (see :meth:`ResidualState.clone`).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence


class DisconnectedGraphError(ValueError):
    """The network graph is not connected; the instance is invalid."""


class InvalidPathError(ValueError):
    """A node sequence uses a link that does not exist in the network."""


class CapacityExceededError(ValueError):
    """A flow commit would drive some residual capacity below zero."""


def link_key(u: str, v: str) -> tuple[str, str]:
    """Canonical unordered key for the link between `u` and `v`."""
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Link:
    """Undirected link with a routing cost (abstract units) and capacity (Mbps)."""

    u: str
    v: str
    cost: float
    capacity_mbps: float

    @property
    def key(self) -> tuple[str, str]:
        return link_key(self.u, self.v)


@dataclass(frozen=True)
class EdgeNetwork:
    """Undirected weighted network with a candidate hosting set.

    Fields:
        nodes: all node ids.
        links: undirected links; at most one per unordered pair, no self-loops.
        candidates: subset of nodes that may host functions.
        gateway: the network gateway node.
        attachment: the node the end user is currently attached to.

    Invariants (checked by ``model.validate_instance``, not here): the graph
    is connected, all costs and capacities are strictly positive, and
    candidates/gateway/attachment are members of ``nodes``.
    """

    nodes: frozenset[str]
    links: tuple[Link, ...]
    candidates: frozenset[str]
    gateway: str
    attachment: str

    @cached_property
    def link_map(self) -> dict[tuple[str, str], Link]:
        return {ln.key: ln for ln in self.links}

    @cached_property
    def adjacency(self) -> dict[str, tuple[tuple[str, float], ...]]:
        """node -> sorted tuple of (neighbor, cost)."""
        adj: dict[str, list[tuple[str, float]]] = {n: [] for n in self.nodes}
        for ln in self.link_map.values():
            adj[ln.u].append((ln.v, ln.cost))
            adj[ln.v].append((ln.u, ln.cost))
        return {n: tuple(sorted(nbrs)) for n, nbrs in adj.items()}

    def has_link(self, u: str, v: str) -> bool:
        return link_key(u, v) in self.link_map

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        start = next(iter(sorted(self.nodes)))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.nodes)


@dataclass(frozen=True)
class PathInfo:
    """One stored shortest path: total cost, node sequence, bottleneck capacity."""

    cost: float
    nodes: tuple[str, ...]
    bottleneck: float


@dataclass(frozen=True)
class PathTable:
    """All-pairs shortest paths over a set of relevant nodes.

    For every ordered pair (a, b) of relevant nodes the table holds the
    minimal routing cost, the minimal-cost node sequence (lexicographically
    smallest among ties), and the bottleneck capacity (minimum link capacity
    along the stored sequence; +inf for the (a, a) pair unless a per-node
    flow limit was supplied).
    """

    pairs: dict[tuple[str, str], PathInfo]
    relevant: frozenset[str]

    def info(self, a: str, b: str) -> PathInfo:
        try:
            return self.pairs[(a, b)]
        except KeyError:
            raise KeyError(f"no path entry for pair ({a!r}, {b!r}); "
                           f"is the node in the relevant set?") from None

    def cost(self, a: str, b: str) -> float:
        return self.info(a, b).cost

    def sequence(self, a: str, b: str) -> tuple[str, ...]:
        return self.info(a, b).nodes

    def bottleneck(self, a: str, b: str) -> float:
        return self.info(a, b).bottleneck

    @cached_property
    def max_cost(self) -> float:
        """Largest pairwise cost in the table (0.0 for a single node)."""
        return max((p.cost for p in self.pairs.values()), default=0.0)


def _dijkstra_lex(network: EdgeNetwork, source: str) -> dict[str, tuple[float, tuple[str, ...]]]:
    """Single-source shortest paths with (cost, node-sequence) lexicographic keys.

    With strictly positive link costs the composite key is extension-monotone,
    so the classic lazy-deletion Dijkstra yields, per target, the minimal cost
    and the lexicographically smallest node sequence among minimal-cost paths.
    """
    adj = network.adjacency
    best: dict[str, tuple[float, tuple[str, ...]]] = {source: (0.0, (source,))}
    heap: list[tuple[float, tuple[str, ...], str]] = [(0.0, (source,), source)]
    while heap:
        cost, seq, u = heapq.heappop(heap)
        if best.get(u) != (cost, seq):
            continue  # stale entry
        for v, w in adj.get(u, ()):
            cand = (cost + w, seq + (v,))
            cur = best.get(v)
            if cur is None or cand < cur:
                best[v] = cand
                heapq.heappush(heap, (cand[0], cand[1], v))
    return best


def shortest_paths(
    network: EdgeNetwork,
    relevant: Iterable[str],
    node_flow_limits: Mapping[str, float] | None = None,
) -> PathTable:
    """Build the all-pairs :class:`PathTable` over `relevant` nodes.

    Args:
        network: connected network; raises :class:`DisconnectedGraphError`
            otherwise.
        relevant: node ids to include (must all be network nodes).
        node_flow_limits: optional per-node flow tolerance used as the
            bottleneck of the degenerate (a, a) pair; defaults to +inf.

    Cost is symmetric across each unordered pair; the stored sequences for
    (a, b) and (b, a) may differ under cost ties but each is the
    lexicographically smallest in its own direction.
    """
    rel = sorted(set(relevant))
    missing = [n for n in rel if n not in network.nodes]
    if missing:
        raise KeyError(f"relevant nodes not in network: {missing}")
    if not network.is_connected():
        raise DisconnectedGraphError("network graph is not connected")

    limits = dict(node_flow_limits or {})
    link_map = network.link_map
    pairs: dict[tuple[str, str], PathInfo] = {}
    by_source = {a: _dijkstra_lex(network, a) for a in rel}
    for a in rel:
        best = by_source[a]
        for b in rel:
            if a == b:
                pairs[(a, a)] = PathInfo(0.0, (a,), limits.get(a, math.inf))
                continue
            _, seq = best[b]
            # Canonical cost from the lexicographically smaller endpoint's
            # run, so P_ab == P_ba exactly despite float summation order.
            cost = by_source[min(a, b)][max(a, b)][0]
            bottleneck = min(
                link_map[link_key(u, v)].capacity_mbps
                for u, v in zip(seq, seq[1:])
            )
            pairs[(a, b)] = PathInfo(cost, seq, bottleneck)
    return PathTable(pairs=pairs, relevant=frozenset(rel))


@dataclass
class ResidualState:
    """Mutable remaining link capacities and node resources.

    `link_remaining` holds Mbps per canonical link key; `node_remaining`
    holds (memory_mb, cpu_cores) per candidate node. Both stay within
    [0, initial].
    """

    link_remaining: dict[tuple[str, str], float]
    node_remaining: dict[str, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def from_network(
        cls,
        network: EdgeNetwork,
        node_resources: Mapping[str, tuple[float, float]] | None = None,
    ) -> "ResidualState":
        links = {ln.key: ln.capacity_mbps for ln in network.link_map.values()}
        nodes = {k: (mem, cpu) for k, (mem, cpu) in (node_resources or {}).items()}
        return cls(link_remaining=links, node_remaining=nodes)

    def clone(self) -> "ResidualState":
        return ResidualState(dict(self.link_remaining), dict(self.node_remaining))

    def node_fits(self, node: str, demand: tuple[float, float]) -> bool:
        mem, cpu = self.node_remaining.get(node, (0.0, 0.0))
        return demand[0] <= mem and demand[1] <= cpu

    def consume_node(self, node: str, demand: tuple[float, float]) -> None:
        if not self.node_fits(node, demand):
            raise CapacityExceededError(
                f"node {node!r} cannot host demand {demand}: "
                f"remaining {self.node_remaining.get(node)}")
        mem, cpu = self.node_remaining[node]
        self.node_remaining[node] = (mem - demand[0], cpu - demand[1])


def _walk_links(network: EdgeNetwork, path: Sequence[str]) -> list[tuple[str, str]]:
    keys = []
    for u, v in zip(path, path[1:]):
        k = link_key(u, v)
        if k not in network.link_map:
            raise InvalidPathError(f"no link between {u!r} and {v!r}")
        keys.append(k)
    return keys


def path_bottleneck(network: EdgeNetwork, path: Sequence[str], residual: ResidualState) -> float:
    """Minimum residual capacity over the links of `path`.

    A zero-length path (a single node) has bottleneck +inf by convention:
    node-local hops never constrain flow unless a per-node limit is modeled
    in the PathTable instead.
    """
    keys = _walk_links(network, path)
    if not keys:
        return math.inf
    return min(residual.link_remaining[k] for k in keys)


def consume_flow(residual: ResidualState, network: EdgeNetwork, path: Sequence[str], rate: float) -> ResidualState:
    """Charge `rate` Mbps on every link of `path`, once per traversal.

    The commit is atomic: if any link's aggregate charge (a link may be
    traversed more than once by a non-simple walk) would exceed its
    remaining capacity, raises :class:`CapacityExceededError` and leaves
    the state untouched. Returns the mutated `residual` for chaining.
    """
    keys = _walk_links(network, path)
    charge: dict[tuple[str, str], float] = {}
    for k in keys:
        charge[k] = charge.get(k, 0.0) + rate
    for k, total in charge.items():
        if total > residual.link_remaining[k]:
            raise CapacityExceededError(
                f"flow {total} exceeds residual {residual.link_remaining[k]} "
                f"on link {k}")
    for k in keys:
        residual.link_remaining[k] -= rate
    return residual


def restore_flow(residual: ResidualState, network: EdgeNetwork, path: Sequence[str], rate: float) -> ResidualState:
    """Inverse of :func:`consume_flow`: credit `rate` back per traversal."""
    keys = _walk_links(network, path)
    for k in keys:
        residual.link_remaining[k] += rate
    return residual

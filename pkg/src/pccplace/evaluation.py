"""Objective evaluation and constraint checking for placements.

The objective has four cost families: placing functions at nodes, routing
from the cache head to the first function, routing between consecutive
functions, and routing from the last function to each handover destination,
the three routing families weighted by the destination probabilities. A
fifth `penalty_term` (zero for fully placed solutions) charges positions a
heuristic failed to host, so partially placed batches remain comparable.

Capacity checking follows per-pair bottleneck semantics: each (endpoint,
endpoint) shortest path has an independent capacity budget, aggregated over
everything mapped to that pair. :func:`check_link_capacities` offers the
stricter per-link alternative in which paths sharing a physical link
contend for its capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

from .graph import PathTable, link_key
from .model import Placement, ProblemInstance


class EvaluationError(ValueError):
    """Placement references indices unknown to the instance."""


class UndefinedGainError(ZeroDivisionError):
    """Relative gain against a zero-cost reference is undefined."""


@dataclass(frozen=True)
class CostReport:
    """Itemized objective value.

    `total` is exactly the sum of the five terms; `penalty_term` is zero
    whenever the placement hosts every chain position.
    """

    placement_term: float
    head_hop_term: float
    chain_hop_term: float
    tail_hop_term: float
    penalty_term: float
    total: float

    @classmethod
    def from_terms(cls, placement: float, head: float, chain: float,
                   tail: float, penalty: float = 0.0) -> "CostReport":
        return cls(placement, head, chain, tail, penalty,
                   placement + head + chain + tail + penalty)

    def to_dict(self) -> dict[str, float]:
        return {
            "placement_term": self.placement_term,
            "head_hop_term": self.head_hop_term,
            "chain_hop_term": self.chain_hop_term,
            "tail_hop_term": self.tail_hop_term,
            "penalty_term": self.penalty_term,
            "total": self.total,
        }


@dataclass(frozen=True)
class ConstraintViolation:
    """One violated constraint row: family id, index tuple, and slack (< 0)."""

    constraint: str
    index: tuple
    slack: float


def _check_indices(instance: ProblemInstance, placement: Placement) -> dict:
    """Resolve requests/positions referenced by the placement or raise."""
    reqs = {r.id: r for r in instance.requests}
    dests = instance.destination_weights
    for (r, i, k) in placement.x:
        if r not in reqs:
            raise EvaluationError(f"unknown request {r!r} in x")
        if i not in reqs[r].chain:
            raise EvaluationError(f"nf {i!r} not in chain of request {r!r}")
        if k not in instance.network.nodes:
            raise EvaluationError(f"unknown node {k!r} in x")
    for (r, i, k, s, d) in placement.y:
        if r not in reqs:
            raise EvaluationError(f"unknown request {r!r} in y")
        req = reqs[r]
        if i not in req.chain:
            raise EvaluationError(f"nf {i!r} not in chain of request {r!r}")
        if s not in req.heads:
            raise EvaluationError(f"head {s!r} not in heads of request {r!r}")
        if d not in dests:
            raise EvaluationError(f"{d!r} is not an evaluation destination")
        if k not in instance.network.nodes:
            raise EvaluationError(f"unknown node {k!r} in y")
    return reqs


def evaluate_cost(
    instance: ProblemInstance,
    placement: Placement,
    paths: PathTable,
    *,
    penalty_cost: float | None = None,
    head_weights: Mapping[tuple[str, str], float] | None = None,
) -> CostReport:
    """Compute the itemized objective for `placement`.

    Destination weights are the mobility profile extended with the
    attachment node at the stay probability. Hop terms are evaluated
    literally on the visit plan: a missing position contributes nothing to
    the hop sums and instead incurs `penalty_cost` per (head, destination)
    pair, weighted like any routed position. `penalty_cost` defaults to
    twice the largest pairwise path cost. `head_weights` optionally scales
    each (request id, head) contribution; the default weight is 1.
    """
    _check_indices(instance, placement)
    weights = instance.destination_weights
    if penalty_cost is None:
        penalty_cost = 2.0 * paths.max_cost

    placement_term = 0.0
    for (r, i, k) in sorted(placement.x):
        placement_term += instance.placing_cost(i, k)

    visits = placement.visits
    head_term = 0.0
    chain_term = 0.0
    tail_term = 0.0
    penalty_term = 0.0
    for req in instance.requests:
        chain = req.chain
        for s in sorted(req.heads):
            hw = 1.0 if head_weights is None else head_weights.get((req.id, s), 1.0)
            for d in sorted(weights):
                w = weights[d] * hw
                visit = visits.get((req.id, s, d), {})
                k_first = visit.get(chain[0])
                if k_first is not None:
                    head_term += w * paths.cost(s, k_first)
                for i, j in zip(chain, chain[1:]):
                    ki, kj = visit.get(i), visit.get(j)
                    if ki is not None and kj is not None:
                        chain_term += w * paths.cost(ki, kj)
                k_last = visit.get(chain[-1])
                if k_last is not None:
                    tail_term += w * paths.cost(k_last, d)
                missing = sum(1 for i in chain if i not in visit)
                if missing:
                    penalty_term += w * penalty_cost * missing
    return CostReport.from_terms(placement_term, head_term, chain_term,
                                 tail_term, penalty_term)


def check_constraints(
    instance: ProblemInstance,
    placement: Placement,
    paths: PathTable,
) -> list[ConstraintViolation]:
    """Check every constraint family; empty list means feasible.

    Families and their index tuples:
      5a  (node, resource)      hosting demand within node capacity
      5b  (head, node)          first-hop flow within the head->node budget
      5c  (node, node)          chain-hop flow within the pair budget
      5d  (node, destination)   last-hop flow within the node->dest budget
      5e  (request, head, destination, position)  visited at least once
      5f  (request, nf, node, head, destination)  visit backed by hosting
      5g/5h/5i                  product-variable links, checked only when the
                                placement carries explicit z entries; 5i is
                                restricted to consecutive chain pairs, the
                                set materialized by the LP export.

    Capacity budgets are per node-pair bottlenecks of the initial network,
    aggregated over all flows mapped to that pair.
    """
    reqs = _check_indices(instance, placement)
    dests = sorted(instance.destination_weights)
    out: list[ConstraintViolation] = []

    used: dict[str, list[float]] = {}
    for (r, i, k) in placement.x:
        dem = instance.catalog[i]
        acc = used.setdefault(k, [0.0, 0.0])
        acc[0] += dem.memory_mb
        acc[1] += dem.cpu_cores
    for k in sorted(instance.node_resources):
        cap = instance.node_resources[k]
        mem, cpu = used.get(k, (0.0, 0.0))
        if cap.memory_mb - mem < 0:
            out.append(ConstraintViolation("5a", (k, "memory_mb"), cap.memory_mb - mem))
        if cap.cpu_cores - cpu < 0:
            out.append(ConstraintViolation("5a", (k, "cpu_cores"), cap.cpu_cores - cpu))

    head_flow: dict[tuple[str, str], float] = {}
    pair_flow: dict[tuple[str, str], float] = {}
    tail_flow: dict[tuple[str, str], float] = {}
    y_nodes: dict[tuple[str, str, str, str], list[str]] = {}
    for (r, i, k, s, d) in sorted(placement.y):
        req = reqs[r]
        if i == req.chain[0]:
            head_flow[(s, k)] = head_flow.get((s, k), 0.0) + req.flow_rate_mbps
        if i == req.chain[-1]:
            tail_flow[(k, d)] = tail_flow.get((k, d), 0.0) + req.flow_rate_mbps
        y_nodes.setdefault((r, s, d, i), []).append(k)
    # chain flow is the literal sum of y-products, so malformed placements
    # with duplicate visits charge every implied pair
    for req in instance.requests:
        for s in sorted(req.heads):
            for d in dests:
                for i, j in zip(req.chain, req.chain[1:]):
                    for ki in y_nodes.get((req.id, s, d, i), ()):
                        for kj in y_nodes.get((req.id, s, d, j), ()):
                            pair_flow[(ki, kj)] = (
                                pair_flow.get((ki, kj), 0.0) + req.flow_rate_mbps)
    for family, flows in (("5b", head_flow), ("5c", pair_flow), ("5d", tail_flow)):
        for (a, b) in sorted(flows):
            budget = paths.bottleneck(a, b)
            if math.isinf(budget):
                continue
            slack = budget - flows[(a, b)]
            if slack < 0:
                out.append(ConstraintViolation(family, (a, b), slack))

    visits = placement.visits
    for req in instance.requests:
        for s in sorted(req.heads):
            for d in dests:
                visit = visits.get((req.id, s, d), {})
                for l, nf in enumerate(req.chain, start=1):
                    if nf not in visit:
                        out.append(ConstraintViolation(
                            "5e", (req.id, s, d, l), -1.0))

    for (r, i, k, s, d) in sorted(placement.y):
        if (r, i, k) not in placement.x:
            out.append(ConstraintViolation("5f", (r, i, k, s, d), -1.0))

    if placement.z is not None:
        y = placement.y
        for (r, i, j, k, m, s, d) in sorted(placement.z):
            if (r, i, k, s, d) not in y:
                out.append(ConstraintViolation("5g", (r, i, j, k, m, s, d), -1.0))
            if (r, j, m, s, d) not in y:
                out.append(ConstraintViolation("5h", (r, i, j, k, m, s, d), -1.0))
        for req in instance.requests:
            for s in sorted(req.heads):
                for d in dests:
                    for i, j in zip(req.chain, req.chain[1:]):
                        for ki in y_nodes.get((req.id, s, d, i), ()):
                            for kj in y_nodes.get((req.id, s, d, j), ()):
                                if (req.id, i, j, ki, kj, s, d) not in placement.z:
                                    out.append(ConstraintViolation(
                                        "5i", (req.id, i, j, ki, kj, s, d), -1.0))
    return out


def check_link_capacities(
    instance: ProblemInstance,
    placement: Placement,
    paths: PathTable,
) -> list[ConstraintViolation]:
    """Strict per-link capacity check.

    Charges every (request, head, destination) route's flow on each physical
    link it traverses (head->first, consecutive hosted pairs, last->dest)
    and flags links whose aggregate exceeds capacity. Stricter than the
    per-pair budgets of :func:`check_constraints` because paths sharing a
    link contend here. Violations use family id "link".
    """
    reqs = {r.id: r for r in instance.requests}
    usage: dict[tuple[str, str], float] = {}

    def charge(a: str, b: str, rate: float) -> None:
        seq = paths.sequence(a, b)
        for u, v in zip(seq, seq[1:]):
            key = link_key(u, v)
            usage[key] = usage.get(key, 0.0) + rate

    for (r, s, d), visit in placement.visits.items():
        req = reqs[r]
        rate = req.flow_rate_mbps
        chain = req.chain
        if chain[0] in visit:
            charge(s, visit[chain[0]], rate)
        for i, j in zip(chain, chain[1:]):
            if i in visit and j in visit:
                charge(visit[i], visit[j], rate)
        if chain[-1] in visit:
            charge(visit[chain[-1]], d, rate)

    link_map = instance.network.link_map
    out = []
    for key in sorted(usage):
        slack = link_map[key].capacity_mbps - usage[key]
        if slack < 0:
            out.append(ConstraintViolation("link", key, slack))
    return out


def gain(cost_a: float, cost_b: float) -> float:
    """Relative gain of `cost_a` over reference `cost_b`: (b - a) / b."""
    if cost_b == 0:
        raise UndefinedGainError("reference cost is zero; gain undefined")
    return (cost_b - cost_a) / cost_b


def violations_to_dicts(violations: list[ConstraintViolation]) -> list[dict[str, Any]]:
    return [
        {"constraint": v.constraint, "index": list(v.index), "slack": v.slack}
        for v in violations
    ]

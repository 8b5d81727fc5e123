"""Exact solution of the placement integer program at desk scale.

The search assigns a hosting node to every (request, head, destination,
chain position) variable in a fixed lexicographic order and runs best-first
branch and bound with an admissible lower bound. It is intended for small
instances (|K| <= 6, |R| <= 3, chains up to 3, up to 2 heads and 2
evaluation destinations); anything larger should use the heuristics.

`export_lp` writes the fully linearized 0-1 program in LP text format with
a documented variable-naming contract so external MILP solvers can
cross-validate the optimum.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

from .evaluation import CostReport, evaluate_cost
from .graph import PathTable, shortest_paths
from .model import Placement, ProblemInstance, build_placement_per_pair


class ExportSizeError(ValueError):
    """The linearized model would exceed the variable-count threshold."""


EXPORT_VARIABLE_LIMIT = 1_000_000


@dataclass(frozen=True)
class SolveBudget:
    """Search budget; whichever limit trips first ends the search."""

    max_nodes_expanded: int = 10_000_000
    wall_time_s: float | None = 60.0


@dataclass(frozen=True)
class ExactResult:
    placement: Placement | None
    cost: CostReport | None
    status: str  # "optimal" | "budget_exceeded" | "infeasible"

    @property
    def total(self) -> float | None:
        return None if self.cost is None else self.cost.total


@dataclass(frozen=True)
class _Var:
    """One decision: which node hosts chain position `l` of `rid` for (s, d)."""

    rid: str
    l: int
    s: str
    d: str
    nf: str
    length: int
    rate: float


def _variables(instance: ProblemInstance) -> list[_Var]:
    """Decision variables in branch order: request, position, head, destination."""
    dests = sorted(instance.destination_weights)
    out = []
    for req in instance.requests:
        for l, nf in enumerate(req.chain, start=1):
            for s in sorted(req.heads):
                for d in dests:
                    out.append(_Var(req.id, l, s, d, nf, len(req.chain),
                                    req.flow_rate_mbps))
    return out


class _SearchState:
    """Incremental feasibility bookkeeping for a prefix assignment."""

    def __init__(self, instance: ProblemInstance, paths: PathTable):
        self.instance = instance
        self.paths = paths
        self.x: set[tuple[str, str, str]] = set()
        self.node_used: dict[str, list[float]] = {}
        self.head_flow: dict[tuple[str, str], float] = {}
        self.pair_flow: dict[tuple[str, str], float] = {}
        self.tail_flow: dict[tuple[str, str], float] = {}

    def can_assign(self, var: _Var, k: str, prev_node: str | None) -> bool:
        inst = self.instance
        if (var.rid, var.nf, k) not in self.x:
            cap = inst.node_resources.get(k)
            if cap is None:
                return False
            dem = inst.catalog[var.nf]
            mem, cpu = self.node_used.get(k, (0.0, 0.0))
            if mem + dem.memory_mb > cap.memory_mb or cpu + dem.cpu_cores > cap.cpu_cores:
                return False
        if var.l == 1:
            budget = self.paths.bottleneck(var.s, k)
            if self.head_flow.get((var.s, k), 0.0) + var.rate > budget:
                return False
        elif prev_node is not None:
            budget = self.paths.bottleneck(prev_node, k)
            if self.pair_flow.get((prev_node, k), 0.0) + var.rate > budget:
                return False
        if var.l == var.length:
            budget = self.paths.bottleneck(k, var.d)
            if self.tail_flow.get((k, var.d), 0.0) + var.rate > budget:
                return False
        return True

    def assign(self, var: _Var, k: str, prev_node: str | None) -> None:
        self.x.add((var.rid, var.nf, k))
        dem = self.instance.catalog[var.nf]
        acc = self.node_used.setdefault(k, [0.0, 0.0])
        acc[0] += dem.memory_mb
        acc[1] += dem.cpu_cores
        if var.l == 1:
            self.head_flow[(var.s, k)] = self.head_flow.get((var.s, k), 0.0) + var.rate
        elif prev_node is not None:
            self.pair_flow[(prev_node, k)] = (
                self.pair_flow.get((prev_node, k), 0.0) + var.rate)
        if var.l == var.length:
            self.tail_flow[(k, var.d)] = self.tail_flow.get((k, var.d), 0.0) + var.rate


def _state_for_prefix(
    instance: ProblemInstance,
    paths: PathTable,
    variables: Sequence[_Var],
    assignment: Sequence[str],
) -> _SearchState:
    state = _SearchState(instance, paths)
    assigned: dict[tuple[str, str, str, int], str] = {}
    for var, k in zip(variables, assignment):
        prev = assigned.get((var.rid, var.s, var.d, var.l - 1))
        state.assign(var, k, prev)
        assigned[(var.rid, var.s, var.d, var.l)] = k
    return state


def lower_bound(
    instance: ProblemInstance,
    paths: PathTable,
    partial: Mapping[tuple[str, str, str, int], str],
) -> float:
    """Admissible lower bound on the best completion of `partial`.

    `partial` maps (request id, head, destination, position) to a hosting
    node. The bound is the cost already committed (placement cost of the
    hosted set plus every hop whose two endpoints are determined) plus, for
    each unassigned position, the minimum over candidate nodes of its
    weighted incident hop costs toward known neighbors, ignoring capacity.
    Fully assigned input yields exactly the evaluated total; the bound never
    decreases as assignments are added.
    """
    weights = instance.destination_weights
    candidates = sorted(instance.network.candidates)

    x: set[tuple[str, str, str]] = set()
    for req in instance.requests:
        for l, nf in enumerate(req.chain, start=1):
            for s in sorted(req.heads):
                for d in sorted(weights):
                    k = partial.get((req.id, s, d, l))
                    if k is not None:
                        x.add((req.id, nf, k))
    placement_term = 0.0
    for (r, i, k) in sorted(x):
        placement_term += instance.placing_cost(i, k)

    head_term = 0.0
    chain_term = 0.0
    tail_term = 0.0
    relax_term = 0.0
    for req in instance.requests:
        chain = req.chain
        L = len(chain)
        for s in sorted(req.heads):
            for d in sorted(weights):
                w = weights[d]
                nodes = [partial.get((req.id, s, d, l)) for l in range(1, L + 1)]
                if nodes[0] is not None:
                    head_term += w * paths.cost(s, nodes[0])
                for a, b in zip(nodes, nodes[1:]):
                    if a is not None and b is not None:
                        chain_term += w * paths.cost(a, b)
                if nodes[-1] is not None:
                    tail_term += w * paths.cost(nodes[-1], d)
                for l in range(1, L + 1):
                    if nodes[l - 1] is not None:
                        continue
                    prev = s if l == 1 else nodes[l - 2]
                    nxt = d if l == L else nodes[l]
                    best = math.inf
                    for k in candidates:
                        c = 0.0
                        if prev is not None:
                            c += paths.cost(prev, k)
                        if nxt is not None:
                            c += paths.cost(k, nxt)
                        if c < best:
                            best = c
                    relax_term += w * best
    return placement_term + head_term + chain_term + tail_term + relax_term


def solve_exact(
    instance: ProblemInstance,
    paths: PathTable | None = None,
    budget: SolveBudget | None = None,
) -> ExactResult:
    """Optimal placement by best-first branch and bound.

    Branching follows the fixed (request, position, head, destination)
    variable order, trying candidate nodes in sorted order; the frontier is
    ordered by (lower bound, assignment vector), so ties resolve to the
    lexicographically smallest assignment and the search is deterministic.
    Returns status "optimal" with the proven optimum, "infeasible" when the
    feasible set is empty, or "budget_exceeded" with the best incumbent
    found (if any) once the node or wall-time budget trips.
    """
    if paths is None:
        paths = shortest_paths(instance.network, instance.relevant_nodes)
    if budget is None:
        budget = SolveBudget()

    variables = _variables(instance)
    candidates = sorted(instance.network.candidates)
    nvars = len(variables)
    if nvars == 0:
        raise ValueError("instance has no chain positions to place")

    def partial_of(assignment: Sequence[str]) -> dict[tuple[str, str, str, int], str]:
        return {
            (v.rid, v.s, v.d, v.l): k
            for v, k in zip(variables, assignment)
        }

    def prev_node_of(assignment: Sequence[str], var: _Var) -> str | None:
        if var.l == 1:
            return None
        return partial_of(assignment).get((var.rid, var.s, var.d, var.l - 1))

    def result_for(assignment: Sequence[str]) -> tuple[Placement, CostReport]:
        placement = build_placement_per_pair(instance, partial_of(assignment))
        return placement, evaluate_cost(instance, placement, paths)

    def feasible_children(assignment: tuple[str, ...]) -> list[tuple[str, ...]]:
        state = _state_for_prefix(instance, paths, variables, assignment)
        var = variables[len(assignment)]
        prev = prev_node_of(assignment, var)
        return [assignment + (k,) for k in candidates
                if state.can_assign(var, k, prev)]

    # Greedy dive for an incumbent so a budget-limited run can still return
    # a feasible point.
    incumbent: tuple[Placement, CostReport] | None = None
    dive: tuple[str, ...] = ()
    while len(dive) < nvars:
        children = feasible_children(dive)
        if not children:
            break
        dive = min(children,
                   key=lambda ch: (lower_bound(instance, paths, partial_of(ch)), ch))
    if len(dive) == nvars:
        incumbent = result_for(dive)

    start = time.perf_counter()
    root_bound = lower_bound(instance, paths, {})
    heap: list[tuple[float, tuple[str, ...]]] = [(root_bound, ())]
    expanded = 0
    # Float rounding can make a partial node's bound overshoot a
    # descendant's exact total by an ulp, so once a complete solution is in
    # hand the search drains the frontier within a tiny slack and returns
    # the (total, assignment)-minimal complete, keeping totals and
    # tie-breaking bit-identical to exhaustive enumeration.
    best: tuple[float, tuple[str, ...], Placement, CostReport] | None = None

    def slack(total: float) -> float:
        return 1e-9 * max(1.0, abs(total))

    while heap:
        if expanded >= budget.max_nodes_expanded or (
                budget.wall_time_s is not None
                and time.perf_counter() - start > budget.wall_time_s):
            if best is not None:
                return ExactResult(best[2], best[3], "budget_exceeded")
            if incumbent is not None:
                return ExactResult(incumbent[0], incumbent[1], "budget_exceeded")
            return ExactResult(None, None, "budget_exceeded")
        bound, assignment = heapq.heappop(heap)
        if best is not None and bound > best[0] + slack(best[0]):
            break
        expanded += 1
        if len(assignment) == nvars:
            placement, cost = result_for(assignment)
            if best is None or (cost.total, assignment) < (best[0], best[1]):
                best = (cost.total, assignment, placement, cost)
            continue
        for child in feasible_children(assignment):
            child_bound = lower_bound(instance, paths, partial_of(child))
            heapq.heappush(heap, (child_bound, child))
    if best is not None:
        return ExactResult(best[2], best[3], "optimal")
    return ExactResult(None, None, "infeasible")


# ---------------------------------------------------------------------------
# LP export
# ---------------------------------------------------------------------------

def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _sanitize(token: str) -> str:
    if not token or not all(c.isalnum() or c in "._-" for c in token):
        raise ValueError(f"id {token!r} is not LP-safe (alphanumeric ._- only)")
    return token


def export_lp(instance: ProblemInstance, paths: PathTable | None = None) -> str:
    """Emit the linearized 0-1 program in LP text format.

    Variable naming contract (raw ids joined by underscores):
      x_<request>_<nf>_<node>
      y_<request>_<nf>_<node>_<head>_<dest>
      z_<request>_<nf_i>_<nf_j>_<node_k>_<node_m>_<head>_<dest>

    y/z variables exist only for NFs in the request's chain; z only for
    consecutive chain pairs (all other product terms carry zero
    coefficients everywhere). Objective coefficients are merged per
    variable, so for single-NF chains the head and tail weights meet on one
    y variable. Zero coefficients are omitted. Capacity rows with infinite
    budgets are omitted. Raises :class:`ExportSizeError` when the model
    would exceed 10^6 variables.
    """
    if paths is None:
        paths = shortest_paths(instance.network, instance.relevant_nodes)
    weights = instance.destination_weights
    dests = sorted(weights)
    candidates = sorted(instance.network.candidates)
    K = len(candidates)

    n_x = n_y = n_z = 0
    for req in instance.requests:
        L = len(req.chain)
        sd = len(req.heads) * len(dests)
        n_x += L * K
        n_y += L * K * sd
        n_z += max(0, L - 1) * K * K * sd
    if n_x + n_y + n_z > EXPORT_VARIABLE_LIMIT:
        raise ExportSizeError(
            f"model has {n_x + n_y + n_z} variables, over the "
            f"{EXPORT_VARIABLE_LIMIT} export threshold")

    def xname(r: str, i: str, k: str) -> str:
        return f"x_{_sanitize(r)}_{_sanitize(i)}_{_sanitize(k)}"

    def yname(r: str, i: str, k: str, s: str, d: str) -> str:
        return "_".join(["y", _sanitize(r), _sanitize(i), _sanitize(k),
                         _sanitize(s), _sanitize(d)])

    def zname(r: str, i: str, j: str, k: str, m: str, s: str, d: str) -> str:
        return "_".join(["z", _sanitize(r), _sanitize(i), _sanitize(j),
                         _sanitize(k), _sanitize(m), _sanitize(s), _sanitize(d)])

    x_vars: list[str] = []
    y_vars: list[str] = []
    z_vars: list[str] = []
    objective: dict[str, float] = {}

    for req in instance.requests:
        heads = sorted(req.heads)
        chain = req.chain
        for nf in chain:
            for k in candidates:
                name = xname(req.id, nf, k)
                x_vars.append(name)
                c = instance.placing_cost(nf, k)
                if c != 0.0:
                    objective[name] = objective.get(name, 0.0) + c
        for nf in chain:
            for k in candidates:
                for s in heads:
                    for d in dests:
                        y_vars.append(yname(req.id, nf, k, s, d))
        for s in heads:
            for d in dests:
                w = weights[d]
                for k in candidates:
                    name = yname(req.id, chain[0], k, s, d)
                    coef = w * paths.cost(s, k)
                    if coef != 0.0:
                        objective[name] = objective.get(name, 0.0) + coef
                    name = yname(req.id, chain[-1], k, s, d)
                    coef = w * paths.cost(k, d)
                    if coef != 0.0:
                        objective[name] = objective.get(name, 0.0) + coef
                for i, j in zip(chain, chain[1:]):
                    for k in candidates:
                        for m in candidates:
                            name = zname(req.id, i, j, k, m, s, d)
                            z_vars.append(name)
                            coef = w * paths.cost(k, m)
                            if coef != 0.0:
                                objective[name] = objective.get(name, 0.0) + coef

    lines: list[str] = []
    lines.append("Minimize")
    obj_terms = []
    for name in x_vars + y_vars + z_vars:
        if name in objective:
            obj_terms.append(f"{_num(objective[name])} {name}")
    lines.append(" obj: " + (" + ".join(obj_terms) if obj_terms else "0 " + x_vars[0]))
    lines.append("Subject To")

    def row(name: str, terms: list[str], op: str, rhs: float) -> None:
        lines.append(f" {name}: " + " + ".join(terms) + f" {op} {_num(rhs)}")

    # (5a) node capacity, one row per resource dimension
    for k in candidates:
        cap = instance.node_resources.get(k)
        if cap is None:
            continue
        mem_terms = []
        cpu_terms = []
        for req in instance.requests:
            for nf in req.chain:
                dem = instance.catalog[nf]
                mem_terms.append(f"{_num(dem.memory_mb)} {xname(req.id, nf, k)}")
                cpu_terms.append(f"{_num(dem.cpu_cores)} {xname(req.id, nf, k)}")
        if mem_terms:
            row(f"cap_mem_{k}", mem_terms, "<=", cap.memory_mb)
            row(f"cap_cpu_{k}", cpu_terms, "<=", cap.cpu_cores)

    # (5b) head-hop flow budgets per (head, node)
    all_heads = sorted({s for req in instance.requests for s in req.heads})
    for s in all_heads:
        for k in candidates:
            budget = paths.bottleneck(s, k)
            if math.isinf(budget):
                continue
            terms = []
            for req in instance.requests:
                if s not in req.heads:
                    continue
                for d in dests:
                    terms.append(f"{_num(req.flow_rate_mbps)} "
                                 f"{yname(req.id, req.chain[0], k, s, d)}")
            if terms:
                row(f"flow_head_{s}_{k}", terms, "<=", budget)

    # (5c) chain-hop flow budgets per ordered candidate pair, via z
    for k in candidates:
        for m in candidates:
            budget = paths.bottleneck(k, m)
            if math.isinf(budget):
                continue
            terms = []
            for req in instance.requests:
                for s in sorted(req.heads):
                    for d in dests:
                        for i, j in zip(req.chain, req.chain[1:]):
                            terms.append(f"{_num(req.flow_rate_mbps)} "
                                         f"{zname(req.id, i, j, k, m, s, d)}")
            if terms:
                row(f"flow_chain_{k}_{m}", terms, "<=", budget)

    # (5d) tail-hop flow budgets per (node, destination)
    for k in candidates:
        for d in dests:
            budget = paths.bottleneck(k, d)
            if math.isinf(budget):
                continue
            terms = []
            for req in instance.requests:
                for s in sorted(req.heads):
                    terms.append(f"{_num(req.flow_rate_mbps)} "
                                 f"{yname(req.id, req.chain[-1], k, s, d)}")
            if terms:
                row(f"flow_tail_{k}_{d}", terms, "<=", budget)

    # (5e) every chain position visited at least once
    for req in instance.requests:
        for s in sorted(req.heads):
            for d in dests:
                for l, nf in enumerate(req.chain, start=1):
                    terms = [f"{yname(req.id, nf, k, s, d)}" for k in candidates]
                    row(f"visit_{req.id}_{s}_{d}_{l}", terms, ">=", 1)

    # (5f) visits only where hosted
    for req in instance.requests:
        for nf in req.chain:
            for k in candidates:
                for s in sorted(req.heads):
                    for d in dests:
                        lines.append(
                            f" link_{req.id}_{nf}_{k}_{s}_{d}: "
                            f"{yname(req.id, nf, k, s, d)} - {xname(req.id, nf, k)} <= 0")

    # (5g)-(5i) product-variable linking
    for req in instance.requests:
        for s in sorted(req.heads):
            for d in dests:
                for i, j in zip(req.chain, req.chain[1:]):
                    for k in candidates:
                        for m in candidates:
                            z = zname(req.id, i, j, k, m, s, d)
                            y1 = yname(req.id, i, k, s, d)
                            y2 = yname(req.id, j, m, s, d)
                            lines.append(f" prod_a_{z[2:]}: {z} - {y1} <= 0")
                            lines.append(f" prod_b_{z[2:]}: {z} - {y2} <= 0")
                            lines.append(f" prod_c_{z[2:]}: {z} - {y1} - {y2} >= -1")

    lines.append("Binaries")
    for name in x_vars + y_vars + z_vars:
        lines.append(f" {name}")
    lines.append("End")
    return "\n".join(lines) + "\n"

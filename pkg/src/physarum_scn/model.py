"""Problem data for supply-chain network design.

A network is a layered DAG rooted at a single firm node.  Every link carries
two polynomial costs: an operating cost of the product flow and an
investment cost of the installed capacity.  Capacity is installed exactly
to cover flow, so both polynomials are evaluated at the link flow when the
objective is computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_DEGREE = 4
MAX_PATHS = 10**6


class InvalidInstanceError(ValueError):
    """Raised when an instance fails validation where a valid one is required."""

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(str(v) for v in self.violations) or "invalid instance"
        super().__init__(msg)


class PathOverflowError(RuntimeError):
    pass


@dataclass(frozen=True)
class Polynomial:
    """Cost polynomial; ``coefficients[k]`` multiplies ``x**k``."""

    coefficients: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            coeffs = (0.0,)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: float) -> float:
        return eval_polynomial(self, x)

    def derivative(self) -> Polynomial:
        coeffs = self.coefficients
        if len(coeffs) == 1:
            return Polynomial((0.0,))
        return Polynomial(tuple(k * coeffs[k] for k in range(1, len(coeffs))))

    def __add__(self, other: Polynomial) -> Polynomial:
        a, b = self.coefficients, other.coefficients
        n = max(len(a), len(b))
        a = a + (0.0,) * (n - len(a))
        b = b + (0.0,) * (n - len(b))
        return Polynomial(tuple(x + y for x, y in zip(a, b)))


def eval_polynomial(p: Polynomial, x: float) -> float:
    """Evaluate ``p`` at a nonnegative point with Horner's scheme."""
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"polynomial argument must be finite and >= 0, got {x!r}")
    acc = 0.0
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class Link:
    id: int
    tail: int
    head: int
    op_cost: Polynomial = field(default_factory=Polynomial)
    inv_cost: Polynomial = field(default_factory=Polynomial)
    cap: float | None = None

    @property
    def cost(self) -> Polynomial:
        """Combined cost of a link whose capacity equals its flow."""
        return self.op_cost + self.inv_cost


class CostUpdate(str, Enum):
    REPLACE = "replace"
    ACCUMULATE = "accumulate"


class ConductivityUpdate(str, Enum):
    SEMI_IMPLICIT = "semi-implicit"
    RAW_ADDITIVE = "raw"


class LengthModel(str, Enum):
    # marginal cost d/df [c(f) + pi(f)]; its fixed point is the system optimum
    MARGINAL = "marginal"
    # c(f) + pi(f) as written in the original update rule
    TOTAL = "total"


class CapacityMode(str, Enum):
    # multiplier m <- max(1, m * f/cap), accumulated across iterations
    CUMULATIVE = "cumulative"
    # multiplier f/cap recomputed from the current flux only
    RATIO = "ratio"


@dataclass(frozen=True)
class SolverParams:
    delta: float = 1e-4
    dt: float = 1.0
    init_length: float = 0.001
    max_iters: int = 10_000
    seed: int = 0
    cost_update_mode: CostUpdate = CostUpdate.REPLACE
    conductivity_update_mode: ConductivityUpdate = ConductivityUpdate.SEMI_IMPLICIT
    length_model: LengthModel = LengthModel.MARGINAL
    capacity_mode: CapacityMode = CapacityMode.CUMULATIVE
    record_trajectory: bool = False
    ground: int | None = None
    directed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "cost_update_mode", CostUpdate(self.cost_update_mode))
        object.__setattr__(
            self, "conductivity_update_mode", ConductivityUpdate(self.conductivity_update_mode)
        )
        object.__setattr__(self, "length_model", LengthModel(self.length_model))
        object.__setattr__(self, "capacity_mode", CapacityMode(self.capacity_mode))


@dataclass(frozen=True)
class NetworkInstance:
    n_nodes: int
    links: tuple[Link, ...]
    source: int
    demands: Mapping[int, float]
    params: SolverParams = field(default_factory=SolverParams)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        demands = {int(k): float(v) for k, v in sorted(self.demands.items())}
        object.__setattr__(self, "demands", demands)

    def __hash__(self):
        return hash((self.n_nodes, self.links, self.source, tuple(self.demands.items()), self.params))

    @cached_property
    def cost_coefficients(self) -> np.ndarray:
        return _coefficient_matrix([lk.cost for lk in self.links])

    @cached_property
    def marginal_coefficients(self) -> np.ndarray:
        return _coefficient_matrix([lk.cost.derivative() for lk in self.links])

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def retailers(self) -> list[int]:
        return sorted(self.demands)

    @property
    def total_demand(self) -> float:
        return sum(self.demands.values())

    @property
    def tails(self) -> np.ndarray:
        return np.array([lk.tail for lk in self.links], dtype=np.intp)

    @property
    def heads(self) -> np.ndarray:
        return np.array([lk.head for lk in self.links], dtype=np.intp)

    def with_params(self, **changes) -> NetworkInstance:
        from dataclasses import replace

        return replace(self, params=replace(self.params, **changes))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    ref: int | None = None

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate_instance(inst: NetworkInstance) -> list[Violation]:
    """Return every invariant violation of ``inst``; empty means valid."""
    out: list[Violation] = []
    n = inst.n_nodes
    if n < 2:
        out.append(Violation("TooFewNodes", f"network needs at least 2 nodes, got {n}"))
    if not 0 <= inst.source < max(n, 0):
        out.append(Violation("BadSource", f"source {inst.source} not in 0..{n - 1}", inst.source))

    seen_pairs: dict[tuple[int, int], int] = {}
    endpoints_ok = True
    for idx, lk in enumerate(inst.links):
        if lk.id != idx:
            out.append(Violation("LinkIdOrder", f"link at position {idx} has id {lk.id}", lk.id))
        if not (0 <= lk.tail < n and 0 <= lk.head < n):
            out.append(Violation("BadEndpoint", f"link {lk.id} joins {lk.tail}->{lk.head} outside 0..{n - 1}", lk.id))
            endpoints_ok = False
            continue
        if lk.tail == lk.head:
            out.append(Violation("SelfLoop", f"link {lk.id} starts and ends at node {lk.tail}", lk.id))
        pair = (lk.tail, lk.head)
        if pair in seen_pairs:
            out.append(Violation("DuplicateLink", f"link {lk.id} duplicates link {seen_pairs[pair]} ({lk.tail}->{lk.head})", lk.id))
        else:
            seen_pairs[pair] = lk.id
        for label, poly in (("op_cost", lk.op_cost), ("inv_cost", lk.inv_cost)):
            coeffs = poly.coefficients
            if not all(math.isfinite(c) for c in coeffs):
                out.append(Violation("NonFiniteCoefficient", f"link {lk.id} {label} has a non-finite coefficient", lk.id))
            elif any(c < 0 for c in coeffs):
                out.append(Violation("NegativeCoefficient", f"link {lk.id} {label} has a negative coefficient", lk.id))
            if poly.degree > MAX_DEGREE:
                out.append(Violation("DegreeTooHigh", f"link {lk.id} {label} has degree {poly.degree} > {MAX_DEGREE}", lk.id))
        if lk.cap is not None and not (math.isfinite(lk.cap) and lk.cap > 0):
            out.append(Violation("CapNonpositive", f"link {lk.id} cap must be > 0, got {lk.cap}", lk.id))

    if not inst.demands:
        out.append(Violation("NoDemand", "no retailer demands given"))
    for node, d in inst.demands.items():
        if not 0 <= node < n:
            out.append(Violation("BadDemandNode", f"demand node {node} not in 0..{n - 1}", node))
        elif node == inst.source:
            out.append(Violation("SourceIsRetailer", f"source {node} carries a demand", node))
        if not (math.isfinite(d) and d > 0):
            out.append(Violation("DemandNonpositive", f"demand at node {node} must be > 0, got {d}", node))

    out.extend(_params_violations(inst.params, n))

    if not endpoints_ok or not 0 <= inst.source < n:
        return out

    succ: dict[int, list[int]] = {i: [] for i in range(n)}
    pred: dict[int, list[int]] = {i: [] for i in range(n)}
    for lk in inst.links:
        if lk.tail != lk.head:  # already reported as SelfLoop
            succ[lk.tail].append(lk.head)
            pred[lk.head].append(lk.tail)

    try:
        tuple(TopologicalSorter({i: pred[i] for i in range(n)}).static_order())
    except CycleError as exc:
        cycle = exc.args[1]
        out.append(Violation("Cycle", f"links form a cycle through nodes {list(reversed(cycle))}"))
        return out

    if pred[inst.source]:
        out.append(Violation("SourceHasInflow", f"source {inst.source} has incoming links", inst.source))
    for node in inst.demands:
        if 0 <= node < n and succ[node]:
            out.append(Violation("DemandNotSink", f"demand node {node} has outgoing links", node))

    from_source = _reach(inst.source, succ)
    retail = [r for r in inst.demands if 0 <= r < n]
    for r in retail:
        if r not in from_source:
            out.append(Violation("UnreachableRetailer", f"retailer {r} is not reachable from source {inst.source}", r))
    to_retail: set[int] = set()
    for r in retail:
        to_retail |= _reach(r, pred)
    for node in range(n):
        if node not in from_source or node not in to_retail:
            out.append(Violation("NodeOffPath", f"node {node} lies on no source-to-retailer path", node))
    return out


def _params_violations(params: SolverParams, n_nodes: int) -> list[Violation]:
    out = []
    for name in ("delta", "dt", "init_length"):
        val = getattr(params, name)
        if not (math.isfinite(val) and val > 0):
            out.append(Violation("BadParam", f"{name} must be > 0, got {val}"))
    if params.max_iters < 1:
        out.append(Violation("BadParam", f"max_iters must be >= 1, got {params.max_iters}"))
    if params.seed < 0:
        out.append(Violation("BadParam", f"seed must be unsigned, got {params.seed}"))
    if params.ground is not None and not 0 <= params.ground < n_nodes:
        out.append(Violation("BadParam", f"ground {params.ground} not in 0..{n_nodes - 1}"))
    return out


def _reach(start: int, adj: Mapping[int, list[int]]) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def check_valid(inst: NetworkInstance) -> NetworkInstance:
    violations = validate_instance(inst)
    if violations:
        raise InvalidInstanceError(violations)
    return inst


def total_objective(inst: NetworkInstance, flows: Sequence[float]) -> float:
    """Sum of operating and investment cost with capacity equal to flow."""
    f = np.asarray(flows, dtype=float)
    if f.shape != (inst.n_links,):
        raise ValueError(f"expected {inst.n_links} link flows, got shape {f.shape}")
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise ValueError("link flows must be finite and nonnegative")
    total = 0.0
    for lk, x in zip(inst.links, f):
        total += eval_polynomial(lk.op_cost, x) + eval_polynomial(lk.inv_cost, x)
    return total


def _coefficient_matrix(polys: Sequence[Polynomial]) -> np.ndarray:
    width = max([MAX_DEGREE + 1] + [len(p.coefficients) for p in polys])
    m = np.zeros((len(polys), width))
    for i, p in enumerate(polys):
        m[i, : len(p.coefficients)] = p.coefficients
    return m


def _horner_rows(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    acc = np.zeros(coeffs.shape[0])
    for k in range(coeffs.shape[1] - 1, -1, -1):
        acc = acc * x + coeffs[:, k]
    return acc


def link_costs(inst: NetworkInstance, flows) -> np.ndarray:
    """Combined cost of every link at the given flows."""
    return _horner_rows(inst.cost_coefficients, np.asarray(flows, dtype=float))


def link_marginals(inst: NetworkInstance, flows) -> np.ndarray:
    """Derivative of the combined cost of every link at the given flows."""
    return _horner_rows(inst.marginal_coefficients, np.asarray(flows, dtype=float))


def enumerate_paths(inst: NetworkInstance, limit: int = MAX_PATHS) -> dict[int, list[tuple[int, ...]]]:
    """All source-to-retailer paths as LinkId tuples, in lexicographic order."""
    out_links: dict[int, list[Link]] = {i: [] for i in range(inst.n_nodes)}
    for lk in inst.links:
        out_links[lk.tail].append(lk)
    for lst in out_links.values():
        lst.sort(key=lambda lk: lk.id)

    # count first so an explosion fails before any allocation
    pred: dict[int, list[int]] = {i: [] for i in range(inst.n_nodes)}
    for lk in inst.links:
        pred[lk.head].append(lk.tail)
    order = TopologicalSorter(pred).static_order()
    counts = dict.fromkeys(range(inst.n_nodes), 0)
    counts[inst.source] = 1
    for node in order:
        for lk in out_links[node]:
            counts[lk.head] += counts[node]
    total = sum(counts[r] for r in inst.demands)
    if total > limit:
        raise PathOverflowError(f"{total} source-retailer paths exceed the limit of {limit}")

    paths: dict[int, list[tuple[int, ...]]] = {r: [] for r in inst.retailers}

    def walk(node: int, prefix: list[int]):
        if node in paths:
            paths[node].append(tuple(prefix))
        for lk in out_links[node]:
            prefix.append(lk.id)
            walk(lk.head, prefix)
            prefix.pop()

    walk(inst.source, [])
    return paths


def path_incidence(inst: NetworkInstance, paths: Iterable[tuple[int, ...]]) -> np.ndarray:
    """Link-path incidence matrix (links x paths)."""
    paths = list(paths)
    m = np.zeros((inst.n_links, len(paths)))
    for j, p in enumerate(paths):
        m[list(p), j] = 1.0
    return m


def node_balance(inst: NetworkInstance, flows: Sequence[float]) -> np.ndarray:
    """Inflow minus outflow at every node."""
    f = np.asarray(flows, dtype=float)
    bal = np.zeros(inst.n_nodes)
    np.add.at(bal, inst.heads, f)
    np.subtract.at(bal, inst.tails, f)
    return bal

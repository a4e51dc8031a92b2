"""Frank-Wolfe reference solver for the total-cost design problem.

The problem is separable and convex once capacity is set equal to flow, so
path-based Frank-Wolfe with exact line search gives an independent optimum
to check the Physarum engine against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial as NpPoly

from .model import (
    Link,
    NetworkInstance,
    check_valid,
    enumerate_paths,
    link_costs,
    link_marginals,
    path_incidence,
)

USED_THRESHOLD = 0.01


class UnreachableRetailerError(ValueError):
    pass


@dataclass
class OracleResult:
    flows: np.ndarray
    objective: float
    kkt_gap: float
    iterations: int
    converged: bool
    relative_gap: float = float("nan")
    path_flows: dict[tuple[int, ...], float] = field(default_factory=dict)
    history: list[float] = field(default_factory=list)


def marginal_cost(link: Link, f: float) -> float:
    """d/df of operating plus investment cost at flow ``f``."""
    if f < 0:
        raise ValueError("flow must be nonnegative")
    return link.op_cost.derivative()(f) + link.inv_cost.derivative()(f)


def shortest_path_marginal(inst: NetworkInstance, flows, retailer: int) -> tuple[int, ...]:
    """Cheapest path to ``retailer`` under marginal link costs.

    Ties go to the lexicographically smallest LinkId sequence.
    """
    paths = enumerate_paths(inst).get(retailer, [])
    if not paths:
        raise UnreachableRetailerError(f"retailer {retailer} has no path from source {inst.source}")
    g = link_marginals(inst, np.maximum(np.asarray(flows, dtype=float), 0.0))
    costs = [g[list(p)].sum() for p in paths]
    return paths[int(np.argmin(costs))]


def _line_search(inst: NetworkInstance, f: np.ndarray, e: np.ndarray, t_max: float) -> float:
    """Exact minimiser over t in [0, t_max] of the objective along f + t*e."""
    nz = np.flatnonzero(e)
    if nz.size == 0 or t_max <= 0:
        return 0.0
    mcoef = inst.marginal_coefficients
    dphi = NpPoly([0.0])
    for a in nz:
        # marginal of link a composed with its flow along the segment
        dphi = dphi + e[a] * NpPoly(mcoef[a])(NpPoly([f[a], e[a]]))
    if dphi(0.0) >= 0:
        return 0.0
    if dphi(t_max) <= 0:
        return t_max
    roots = dphi.roots()
    real = roots[np.abs(roots.imag) <= 1e-9 * max(1.0, t_max)].real
    inside = real[(real >= 0) & (real <= t_max)]
    t = float(inside[np.argmin(np.abs(dphi(inside)))]) if inside.size else 0.5 * t_max
    d2phi = dphi.deriv()
    for _ in range(3):
        slope = d2phi(t)
        if slope <= 0:
            break
        t = min(max(t - dphi(t) / slope, 0.0), t_max)
    return float(np.clip(t, 0.0, t_max))


def frank_wolfe_solve(
    inst: NetworkInstance,
    tol: float = 1e-6,
    max_iters: int = 10_000,
    variant: str = "pairwise",
    used_threshold: float = USED_THRESHOLD,
) -> OracleResult:
    """Minimise total link cost subject to meeting every retailer demand.

    ``variant="classic"`` moves towards the all-or-nothing assignment on
    current shortest marginal-cost paths.  ``variant="pairwise"`` sweeps the
    retailers and, for each, shifts flow from its most expensive used path
    to its cheapest path; it can drop paths entirely and converges much
    faster.  Both stop once the duality gap divided by the objective is at
    most ``tol``.
    """
    if variant not in ("pairwise", "classic"):
        raise ValueError(f"unknown variant {variant!r}")
    check_valid(inst)
    by_retailer = enumerate_paths(inst)
    all_paths: list[tuple[int, ...]] = []
    groups: list[np.ndarray] = []
    demand = []
    for r in inst.retailers:
        if not by_retailer[r]:
            raise UnreachableRetailerError(f"retailer {r} has no path")
        start = len(all_paths)
        all_paths.extend(by_retailer[r])
        groups.append(np.arange(start, len(all_paths)))
        demand.append(inst.demands[r])
    delta = path_incidence(inst, all_paths)

    def aon(g_path):
        y = np.zeros(len(all_paths))
        for idx, d in zip(groups, demand):
            y[idx[int(np.argmin(g_path[idx]))]] = d
        return y

    x = aon(delta.T @ link_marginals(inst, np.zeros(inst.n_links)))
    f = delta @ x
    history = [float(link_costs(inst, f).sum())]
    rel_gap = float("inf")
    converged = False
    it = 0
    while True:
        g_path = delta.T @ link_marginals(inst, f)
        obj = history[-1]
        lower = sum(d * g_path[idx].min() for idx, d in zip(groups, demand))
        rel_gap = max(float(x @ g_path - lower), 0.0) / max(abs(obj), 1e-12)
        if rel_gap <= tol:
            converged = True
            break
        if it >= max_iters:
            break
        it += 1
        if variant == "classic":
            y = aon(g_path)
            d_path = y - x
            t = _line_search(inst, f, delta @ d_path, 1.0)
            x = x + t * d_path
        else:
            for idx in groups:
                g_path = delta.T @ link_marginals(inst, f)
                gk = g_path[idx]
                best = idx[int(np.argmin(gk))]
                used = idx[x[idx] > 0]
                worst = used[int(np.argmax(g_path[used]))]
                if worst == best or g_path[worst] - g_path[best] <= 0:
                    continue
                e = delta[:, best] - delta[:, worst]
                t = _line_search(inst, f, e, x[worst])
                if t >= x[worst]:
                    t = x[worst]
                    x[best] += t
                    x[worst] = 0.0
                else:
                    x[best] += t
                    x[worst] -= t
                f = delta @ x
        f = delta @ x
        history.append(float(link_costs(inst, f).sum()))

    flows = np.maximum(f, 0.0)
    return OracleResult(
        flows=flows,
        objective=float(link_costs(inst, flows).sum()),
        kkt_gap=kkt_gap(inst, flows, used_threshold),
        iterations=it,
        converged=converged,
        relative_gap=rel_gap,
        path_flows={p: float(v) for p, v in zip(all_paths, x) if v > 0},
        history=history,
    )


def kkt_gap(inst: NetworkInstance, flows, used_threshold: float = USED_THRESHOLD) -> float:
    """Largest spread, over retailers, between used-path and cheapest-path marginal cost.

    A path counts as used when every link on it carries more than
    ``used_threshold``; at an optimum every such path has minimal marginal
    cost, so the result is 0 there.
    """
    f = np.asarray(flows, dtype=float)
    g = link_marginals(inst, np.maximum(f, 0.0))
    worst = 0.0
    for r, paths in enumerate_paths(inst).items():
        if not paths:
            continue
        cost = np.array([g[list(p)].sum() for p in paths])
        used = np.array([f[list(p)].min() > used_threshold for p in paths])
        if used.any():
            worst = max(worst, float(cost[used].max() - cost.min()))
    return worst


@dataclass
class ComparisonReport:
    objective_rel_err: float
    max_flow_abs_err: float
    engine_objective: float
    oracle_objective: float
    rows: list[tuple[int, float, float, float]]

    def format(self) -> str:
        lines = [
            "link,engine_flow,oracle_flow,abs_err",
            *(f"{a},{e:.6f},{o:.6f},{d:.6f}" for a, e, o, d in self.rows),
            f"# engine_objective,{self.engine_objective:.6f}",
            f"# oracle_objective,{self.oracle_objective:.6f}",
            f"# objective_rel_err,{self.objective_rel_err:.6e}",
            f"# max_flow_abs_err,{self.max_flow_abs_err:.6f}",
        ]
        return "\n".join(lines) + "\n"


def compare(engine_sol, oracle_res) -> ComparisonReport:
    ef = np.asarray(engine_sol.flows, dtype=float)
    of = np.asarray(oracle_res.flows, dtype=float)
    if ef.shape != of.shape:
        raise ValueError(f"flow vectors differ in shape: {ef.shape} vs {of.shape}")
    diff = np.abs(ef - of)
    denom = abs(oracle_res.objective)
    rel = abs(engine_sol.objective - oracle_res.objective) / denom if denom > 0 else abs(engine_sol.objective)
    return ComparisonReport(
        objective_rel_err=float(rel),
        max_flow_abs_err=float(diff.max()) if diff.size else 0.0,
        engine_objective=float(engine_sol.objective),
        oracle_objective=float(oracle_res.objective),
        rows=[(i, float(a), float(b), float(d)) for i, (a, b, d) in enumerate(zip(ef, of, diff))],
    )

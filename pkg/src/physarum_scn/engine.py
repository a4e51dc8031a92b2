"""Physarum flux/conductivity iteration for supply-chain network design.

Each iteration solves the pressure system for the current conductivities
``D`` and effective lengths ``L``, converts pressure drops into link fluxes,
lets fluxes reinforce conductivities, and re-prices every link from the
flux it now carries.  The loop stops once the total conductivity change
falls below ``delta``.

With the default ``LengthModel.MARGINAL`` the steady state ``D = |Q|``
forces the pressure drop across every used link to equal its marginal cost,
so all used paths to a retailer end up with equal marginal cost, which is
the first-order optimality condition of the total-cost problem.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .model import (
    CapacityMode,
    ConductivityUpdate,
    CostUpdate,
    LengthModel,
    NetworkInstance,
    SolverParams,
    check_valid,
    link_costs,
    link_marginals,
    total_objective,
)
from .pressure import assemble_system, solve_pressures

D_FLOOR = 1e-12
CR_FLOOR = 1e-6
PRUNE_THRESHOLD = 0.05
REVERSE_TOL = 1e-6


class Status(str, enum.Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"


@dataclass
class SolverState:
    iter: int
    D: np.ndarray
    Q: np.ndarray
    p: np.ndarray
    L: np.ndarray
    cap_factor: np.ndarray
    delta_D: float = float("inf")


@dataclass
class Solution:
    flows: np.ndarray
    capacities: np.ndarray
    objective: float
    converged: bool
    iterations: int
    removed_links: list[int]
    lengths: np.ndarray
    reverse_flux_links: list[int] = field(default_factory=list)
    trajectory: np.ndarray | None = None
    params: SolverParams = field(default_factory=SolverParams)


def init_state(inst: NetworkInstance) -> SolverState:
    params = inst.params
    rng = np.random.default_rng(params.seed)
    # random() draws from [0, 1); reflect onto (0, 1]
    D = 1.0 - rng.random(inst.n_links)
    return SolverState(
        iter=0,
        D=D,
        Q=np.zeros(inst.n_links),
        p=np.zeros(inst.n_nodes),
        L=np.full(inst.n_links, float(params.init_length)),
        cap_factor=np.ones(inst.n_links),
    )


def compute_flux(state: SolverState, inst: NetworkInstance) -> np.ndarray:
    """Poiseuille flux, positive in the tail-to-head direction."""
    drop = state.p[inst.tails] - state.p[inst.heads]
    return state.D / state.L * drop


def update_conductivity(state: SolverState, params: SolverParams) -> np.ndarray:
    """Reinforce conductivities with the flux each link carries.

    With ``params.directed`` only flux along the declared link direction
    counts, so a link the pressure field drives backwards decays away.
    """
    absQ = np.maximum(state.Q, 0.0) if params.directed else np.abs(state.Q)
    if params.conductivity_update_mode is ConductivityUpdate.SEMI_IMPLICIT:
        dt = params.dt
        D = (state.D + dt * absQ) / (1.0 + dt)
    else:
        D = state.D + absQ
    return np.maximum(D, D_FLOOR)


def capacity_ratio(flow: float, cap: float | None) -> float:
    if cap is None:
        return 1.0
    return max(flow / cap, CR_FLOOR)


def update_capacity_factor(state: SolverState, inst: NetworkInstance, params: SolverParams) -> np.ndarray:
    """Length multiplier for capped links; 1 for links without a cap.

    ``RATIO`` uses the instantaneous flow/cap ratio.  ``CUMULATIVE`` keeps a
    running product clipped below at 1, so a link pinned at its cap keeps
    the multiplier it needed to stay there.
    """
    absQ = np.abs(state.Q)
    cr = np.array([capacity_ratio(f, lk.cap) for f, lk in zip(absQ, inst.links)])
    if params.capacity_mode is CapacityMode.RATIO:
        return cr
    capped = np.array([lk.cap is not None for lk in inst.links], dtype=bool)
    return np.where(capped, np.maximum(1.0, state.cap_factor * cr), 1.0)


def update_link_costs(
    state: SolverState,
    inst: NetworkInstance,
    params: SolverParams,
    cap_factor: np.ndarray | None = None,
) -> np.ndarray:
    if cap_factor is None:
        cap_factor = update_capacity_factor(state, inst, params)
    f = np.abs(state.Q)
    if params.length_model is LengthModel.MARGINAL:
        base = link_marginals(inst, f)
    else:
        base = link_costs(inst, f)
    if params.cost_update_mode is CostUpdate.REPLACE:
        L = cap_factor * base
    else:
        L = (state.L + base) * cap_factor
    # zero or vanishing lengths would make the conductance infinite
    return np.maximum(L, params.init_length)


def check_termination(state: SolverState, prev_D: np.ndarray, params: SolverParams) -> Status:
    change = float(np.abs(state.D - prev_D).sum())
    if change <= params.delta:
        return Status.CONVERGED
    if state.iter >= params.max_iters:
        return Status.MAX_ITERS
    return Status.CONTINUE


def step(state: SolverState, inst: NetworkInstance) -> SolverState:
    """One pass: pressures, flux, conductivity, lengths."""
    params = inst.params
    system = assemble_system(inst, state.D, state.L, ground=params.ground)
    p = solve_pressures(system)
    solved = replace(state, p=p)
    Q = compute_flux(solved, inst)
    fluxed = replace(solved, Q=Q)
    D = update_conductivity(fluxed, params)
    factor = update_capacity_factor(fluxed, inst, params)
    L = update_link_costs(fluxed, inst, params, cap_factor=factor)
    return SolverState(
        iter=state.iter + 1,
        D=D,
        Q=Q,
        p=p,
        L=L,
        cap_factor=factor,
        delta_D=float(np.abs(D - state.D).sum()),
    )


def run_solver(
    inst: NetworkInstance,
    callback: Callable[[SolverState], None] | None = None,
) -> Solution:
    """Iterate until the conductivities settle or ``max_iters`` is reached.

    ``callback`` sees every post-iteration state; the pressures and fluxes in
    it are the ones that produced the new ``D`` and ``L``.
    """
    check_valid(inst)
    params = inst.params
    state = init_state(inst)
    trajectory = [] if params.record_trajectory else None
    while True:
        prev_D = state.D
        state = step(state, inst)
        if trajectory is not None:
            trajectory.append(np.abs(state.Q))
        if callback is not None:
            callback(state)
        status = check_termination(state, prev_D, params)
        if status is not Status.CONTINUE:
            break
    sol = extract_solution(state, inst, converged=status is Status.CONVERGED)
    if trajectory is not None:
        sol.trajectory = np.vstack(trajectory)
    return sol


def extract_solution(state: SolverState, inst: NetworkInstance, converged: bool = False) -> Solution:
    flows = np.maximum(state.Q, 0.0)
    reverse = np.flatnonzero(state.Q < -REVERSE_TOL).tolist()
    removed = np.flatnonzero(flows < PRUNE_THRESHOLD).tolist()
    return Solution(
        flows=flows,
        capacities=flows.copy(),
        objective=total_objective(inst, flows),
        converged=converged,
        iterations=state.iter,
        removed_links=removed,
        lengths=state.L.copy(),
        reverse_flux_links=reverse,
        params=inst.params,
    )

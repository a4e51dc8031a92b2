"""scikit-learn style wrappers around the engine and the reference solver.

The "data" passed to ``fit`` is a :class:`NetworkInstance`; the fitted
design is exposed through trailing-underscore attributes.  Hyper-parameters
live on the estimator, so ``get_params``/``set_params``/``clone`` and
parameter sweeps work as usual.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .engine import run_solver
from .model import InvalidInstanceError, NetworkInstance, SolverParams, validate_instance
from .oracle import frank_wolfe_solve


def check_type(inst) -> NetworkInstance:
    if not isinstance(inst, NetworkInstance):
        raise TypeError(f"expected a NetworkInstance, got {type(inst).__name__}")
    return inst


def check_instance(inst) -> NetworkInstance:
    """Return ``inst`` if it is a valid :class:`NetworkInstance`, raise otherwise."""
    violations = validate_instance(check_type(inst))
    if violations:
        raise InvalidInstanceError(violations)
    return inst


def _check_fitted(est, attr="flows_"):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class PhysarumDesigner(BaseEstimator):
    """Design a network by running the Physarum flux/conductivity dynamics.

    Parameters mirror :class:`SolverParams`; ``random_state`` is the seed for
    the initial conductivities.  After ``fit``: ``flows_``, ``capacities_``,
    ``objective_``, ``n_iter_``, ``converged_``, ``removed_links_``,
    ``trajectory_`` (or None) and the full ``solution_``.
    """

    def __init__(
        self,
        delta=1e-4,
        dt=1.0,
        init_length=0.001,
        max_iters=10_000,
        random_state=0,
        cost_update="replace",
        conductivity_update="semi-implicit",
        length_model="marginal",
        capacity_mode="cumulative",
        record_trajectory=False,
        ground=None,
        directed=True,
    ):
        self.delta = delta
        self.dt = dt
        self.init_length = init_length
        self.max_iters = max_iters
        self.random_state = random_state
        self.cost_update = cost_update
        self.conductivity_update = conductivity_update
        self.length_model = length_model
        self.capacity_mode = capacity_mode
        self.record_trajectory = record_trajectory
        self.ground = ground
        self.directed = directed

    def solver_params(self) -> SolverParams:
        return SolverParams(
            delta=self.delta,
            dt=self.dt,
            init_length=self.init_length,
            max_iters=self.max_iters,
            seed=self.random_state,
            cost_update_mode=self.cost_update,
            conductivity_update_mode=self.conductivity_update,
            length_model=self.length_model,
            capacity_mode=self.capacity_mode,
            record_trajectory=self.record_trajectory,
            ground=self.ground,
            directed=self.directed,
        )

    def fit(self, inst, y=None):
        inst = check_instance(replace(check_type(inst), params=self.solver_params()))
        sol = run_solver(inst)
        self.solution_ = sol
        self.flows_ = sol.flows
        self.capacities_ = sol.capacities
        self.objective_ = sol.objective
        self.n_iter_ = sol.iterations
        self.converged_ = sol.converged
        self.removed_links_ = sol.removed_links
        self.trajectory_ = sol.trajectory
        self.n_links_ = inst.n_links
        return self

    def predict(self, inst=None) -> np.ndarray:
        """Designed link flows (capacity equals flow)."""
        _check_fitted(self)
        return self.flows_

    def fit_predict(self, inst, y=None) -> np.ndarray:
        return self.fit(inst).predict(inst)

    def score(self, inst, y=None) -> float:
        """Negative total cost of the fitted design, so larger is better."""
        _check_fitted(self)
        return -float(self.objective_)


class FrankWolfeDesigner(BaseEstimator):
    """Reference optimum by path-based Frank-Wolfe with exact line search."""

    def __init__(self, tol=1e-6, max_iters=10_000, variant="pairwise", used_threshold=0.01):
        self.tol = tol
        self.max_iters = max_iters
        self.variant = variant
        self.used_threshold = used_threshold

    def fit(self, inst, y=None):
        inst = check_instance(inst)
        res = frank_wolfe_solve(
            inst, tol=self.tol, max_iters=self.max_iters, variant=self.variant, used_threshold=self.used_threshold
        )
        self.result_ = res
        self.flows_ = res.flows
        self.objective_ = res.objective
        self.kkt_gap_ = res.kkt_gap
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        return self

    def predict(self, inst=None) -> np.ndarray:
        _check_fitted(self)
        return self.flows_

    def fit_predict(self, inst, y=None) -> np.ndarray:
        return self.fit(inst).predict(inst)

    def score(self, inst, y=None) -> float:
        _check_fitted(self)
        return -float(self.objective_)

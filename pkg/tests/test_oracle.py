import dataclasses
import itertools

import numpy as np
import pytest

from physarum_scn import Link, NetworkInstance, Polynomial, builtin_example, run_solver, total_objective
from physarum_scn.instances import TABLE_FLOWS
from physarum_scn.model import enumerate_paths, link_marginals, node_balance
from physarum_scn.oracle import (
    OracleResult,
    UnreachableRetailerError,
    compare,
    frank_wolfe_solve,
    kkt_gap,
    marginal_cost,
    shortest_path_marginal,
)

from helpers import random_layered_instance

EXAMPLE2_ORACLE_OBJECTIVE = 13718.869079  # oracle-derived regression value, tol 1e-6


def parallel(c0, c1, d=1.0):
    links = [
        Link(0, 0, 1, Polynomial((0, c0)), Polynomial((0,))),
        Link(1, 0, 1, Polynomial((0, c1)), Polynomial((0,))),
    ]
    return NetworkInstance(n_nodes=2, links=links, source=0, demands={1: d})


def chain(d=3.0):
    links = [
        Link(0, 0, 1, Polynomial((0, 2, 1)), Polynomial((0, 1))),
        Link(1, 1, 2, Polynomial((1, 0, 0.5)), Polynomial((0, 3))),
        Link(2, 1, 3, Polynomial((0, 1)), Polynomial((0, 0, 2))),
    ]
    return NetworkInstance(n_nodes=4, links=links, source=0, demands={2: d, 3: 2.0})


@pytest.fixture(scope="module")
def oracle():
    return {n: frank_wolfe_solve(builtin_example(n)) for n in (1, 2, 3)}


# -- marginal_cost ----------------------------------------------------------

def test_marginal_cost_table1_link1():
    link = builtin_example(1).links[0]
    assert marginal_cost(link, 29.08) == pytest.approx(90.24)


def test_marginal_cost_at_zero():
    link = Link(0, 0, 1, Polynomial((4, 3, 9)), Polynomial((1, 2, 7)))
    assert marginal_cost(link, 0.0) == 5.0


def test_marginal_cost_linear_investment():
    link = builtin_example(2).links[9]
    op_only = dataclasses.replace(link, inv_cost=Polynomial((0,)))
    for f in (0.0, 3.0, 54.5):
        assert marginal_cost(link, f) - marginal_cost(op_only, f) == pytest.approx(5.0)


def test_marginal_cost_negative_flow():
    with pytest.raises(ValueError):
        marginal_cost(builtin_example(1).links[0], -1.0)


# -- shortest_path_marginal -------------------------------------------------

def test_shortest_picks_cheaper_parallel_link():
    assert shortest_path_marginal(parallel(3, 2), np.zeros(2), 1) == (1,)


def test_shortest_tie_goes_to_lower_id():
    assert shortest_path_marginal(parallel(2, 2), np.zeros(2), 1) == (0,)


def test_shortest_example1_brute_force():
    inst = builtin_example(1)
    g = link_marginals(inst, np.zeros(17))
    assert sum(len(ps) for ps in enumerate_paths(inst).values()) == 18
    for r in inst.retailers:
        path = shortest_path_marginal(inst, np.zeros(17), r)
        assert path in enumerate_paths(inst)[r]
        best = min(g[list(p)].sum() for p in enumerate_paths(inst)[r])
        assert g[list(path)].sum() == pytest.approx(best)


def test_shortest_unreachable():
    inst = parallel(1, 1)
    with pytest.raises(UnreachableRetailerError):
        shortest_path_marginal(inst, np.zeros(2), 0)


# -- frank_wolfe_solve ------------------------------------------------------

def test_example1_objective(oracle):
    assert oracle[1].converged
    assert oracle[1].objective == pytest.approx(16125.65, rel=1e-3)


def test_example3_objective(oracle):
    assert oracle[3].objective == pytest.approx(10726.48, rel=1e-3)


def test_example2_regression_and_table(oracle):
    assert oracle[2].objective == pytest.approx(EXAMPLE2_ORACLE_OBJECTIVE, rel=1e-6)
    np.testing.assert_allclose(oracle[2].flows, TABLE_FLOWS[2], atol=0.2)


def test_feasibility(oracle):
    for n, res in oracle.items():
        inst = builtin_example(n)
        bal = node_balance(inst, res.flows)
        expected = np.zeros(inst.n_nodes)
        expected[inst.source] = -inst.total_demand
        for r, d in inst.demands.items():
            expected[r] = d
        np.testing.assert_allclose(bal, expected, atol=1e-9)
        assert np.all(res.flows >= 0)


def test_single_path_network():
    inst = chain()
    res = frank_wolfe_solve(inst)
    np.testing.assert_allclose(res.flows, [5.0, 3.0, 2.0])
    assert res.objective == pytest.approx(total_objective(inst, np.array([5.0, 3.0, 2.0])))
    assert kkt_gap(inst, res.flows) == 0.0


@pytest.mark.parametrize("variant", ["pairwise", "classic"])
def test_history_monotone(variant):
    res = frank_wolfe_solve(builtin_example(1), tol=1e-3, variant=variant)
    assert res.converged
    h = np.array(res.history)
    assert np.all(np.diff(h) <= 1e-9 * h[0])


def test_classic_matches_pairwise():
    # classic FW converges sublinearly; a loose gap still bounds the objective error
    a = frank_wolfe_solve(builtin_example(3), variant="classic", tol=1e-3)
    b = frank_wolfe_solve(builtin_example(3))
    assert b.objective <= a.objective <= b.objective * (1 + 1e-3)


def test_max_iters_returns_best_iterate():
    res = frank_wolfe_solve(builtin_example(1), tol=1e-12, max_iters=2)
    assert isinstance(res, OracleResult)
    assert not res.converged and res.iterations == 2
    assert np.isfinite(res.objective)


def test_unknown_variant():
    with pytest.raises(ValueError):
        frank_wolfe_solve(builtin_example(1), variant="nope")


def test_cvxpy_cross_check():
    cp = pytest.importorskip("cvxpy")
    inst = builtin_example(2)
    f = cp.Variable(inst.n_links, nonneg=True)
    A = np.zeros((inst.n_nodes, inst.n_links))
    A[inst.heads, np.arange(inst.n_links)] += 1
    A[inst.tails, np.arange(inst.n_links)] -= 1
    b = np.zeros(inst.n_nodes)
    b[inst.source] = -inst.total_demand
    for r, d in inst.demands.items():
        b[r] = d
    C = inst.cost_coefficients
    cost = C[:, 1] @ f + cp.sum(cp.multiply(C[:, 2], cp.square(f)))
    cp.Problem(cp.Minimize(cost), [A @ f == b]).solve()
    ref = total_objective(inst, np.maximum(f.value, 0))
    assert frank_wolfe_solve(inst).objective == pytest.approx(ref, rel=1e-5)


# -- kkt_gap ----------------------------------------------------------------

def test_kkt_small_at_convergence(oracle):
    for res in oracle.values():
        assert res.kkt_gap < 0.5


def test_kkt_decreases_with_tol():
    gaps = [frank_wolfe_solve(builtin_example(1), tol=t).kkt_gap for t in (1e-4, 1e-6, 1e-8)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_kkt_perturbed_optimum(oracle):
    inst = builtin_example(1)
    res = oracle[1]
    used = [p for p, v in res.path_flows.items() if v > 1.0 and inst.links[p[-1]].head == 8]
    assert len(used) >= 2
    f = res.flows.copy()
    f[list(used[0])] += 1.0
    f[list(used[1])] -= 1.0
    assert kkt_gap(inst, f) > kkt_gap(inst, res.flows)
    assert kkt_gap(inst, f) > 0


# -- compare ----------------------------------------------------------------

def test_compare_self_is_zero(oracle):
    rep = compare(oracle[1], oracle[1])
    assert rep.objective_rel_err == 0 and rep.max_flow_abs_err == 0
    assert rep.format().startswith("link,engine_flow,oracle_flow,abs_err\n0,")


def test_compare_engine_example1(oracle):
    rep = compare(run_solver(builtin_example(1)), oracle[1])
    assert rep.objective_rel_err <= 0.02
    assert len(rep.rows) == 17


def test_compare_shape_mismatch(oracle):
    with pytest.raises(ValueError):
        compare(frank_wolfe_solve(chain()), oracle[1])


def test_compare_format_deterministic(oracle):
    assert compare(oracle[2], oracle[3]).format() == compare(oracle[2], oracle[3]).format()


# -- properties -------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_oracle_never_worse_than_engine(seed):
    inst = random_layered_instance(seed)
    res = frank_wolfe_solve(inst, tol=1e-8)
    sol = run_solver(inst)
    assert res.objective <= sol.objective * (1 + 1e-6)


def test_single_path_engine_agrees():
    inst = chain()
    np.testing.assert_allclose(run_solver(inst).flows, frank_wolfe_solve(inst).flows, atol=1e-3)


def test_forced_flows_on_random_trees():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 8))
        links = []
        for v in range(1, n):
            parent = int(rng.integers(0, v))
            links.append(Link(v - 1, parent, v, Polynomial((0, rng.uniform(0, 3), rng.uniform(0.1, 2))), Polynomial((0, 1))))
        heads = {lk.tail for lk in links}
        leaves = [v for v in range(1, n) if v not in heads]
        inst = NetworkInstance(n_nodes=n, links=links, source=0, demands={v: float(rng.uniform(1, 9)) for v in leaves})
        np.testing.assert_allclose(run_solver(inst).flows, frank_wolfe_solve(inst).flows, atol=1e-3)


def test_paths_exhaustive_small():
    # every 2-subset perturbation of the chain is infeasible, so the oracle point is unique
    inst = chain()
    res = frank_wolfe_solve(inst)
    for a, b in itertools.combinations(range(3), 2):
        f = res.flows.copy()
        f[a] += 0.1
        f[b] -= 0.1
        assert not np.allclose(node_balance(inst, f), node_balance(inst, res.flows))

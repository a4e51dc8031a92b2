import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from physarum_scn import FrankWolfeDesigner, InvalidInstanceError, PhysarumDesigner, builtin_example, run_solver
from physarum_scn.estimator import check_instance, check_type
from physarum_scn.model import Link, NetworkInstance


def test_get_params_and_clone():
    est = PhysarumDesigner(random_state=4, cost_update="accumulate")
    params = est.get_params()
    assert params["random_state"] == 4 and params["cost_update"] == "accumulate"
    twin = clone(est)
    assert twin.get_params() == params and not hasattr(twin, "flows_")


def test_set_params():
    est = PhysarumDesigner().set_params(delta=1e-6, max_iters=50)
    assert est.solver_params().delta == 1e-6 and est.solver_params().max_iters == 50


def test_fit_matches_run_solver():
    est = PhysarumDesigner(random_state=2).fit(builtin_example(1))
    ref = run_solver(builtin_example(1).with_params(seed=2))
    np.testing.assert_array_equal(est.flows_, ref.flows)
    assert est.converged_ and est.n_iter_ == ref.iterations
    assert est.removed_links_ == [13]
    assert est.score(None) == -est.objective_
    assert est.predict() is est.flows_


def test_fit_predict_and_trajectory():
    est = PhysarumDesigner(record_trajectory=True)
    flows = est.fit_predict(builtin_example(3))
    assert flows.shape == (17,) and est.trajectory_.shape[0] == est.n_iter_


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PhysarumDesigner().predict()
    with pytest.raises(NotFittedError):
        FrankWolfeDesigner().score(None)


def test_frank_wolfe_designer():
    est = FrankWolfeDesigner().fit(builtin_example(1))
    assert est.converged_ and est.kkt_gap_ < 0.5
    assert est.objective_ == pytest.approx(16125.65, rel=1e-3)
    assert clone(est).get_params() == est.get_params()


def test_input_validation():
    with pytest.raises(TypeError):
        check_type({"links": []})
    bad = NetworkInstance(n_nodes=2, links=[Link(0, 0, 1)], source=0, demands={})
    with pytest.raises(InvalidInstanceError):
        check_instance(bad)
    with pytest.raises(InvalidInstanceError):
        PhysarumDesigner().fit(bad)
    with pytest.raises(InvalidInstanceError):
        PhysarumDesigner(delta=-1.0).fit(builtin_example(1))

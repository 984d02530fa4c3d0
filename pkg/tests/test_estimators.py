import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import make_instance
from onebitcs import (
    AdaptiveOneBitRecovery,
    Encoder,
    L0Decoder,
    L1Decoder,
    LogSumDecoder,
    WeightedL1Decoder,
    decode_l1,
    gen_gaussian_matrix,
    gen_sparse_signal,
)
from onebitcs.exceptions import InvalidArgumentError

DECODERS = [L1Decoder(), WeightedL1Decoder(), LogSumDecoder(max_outer=4), L0Decoder(max_sparsity=1)]


@pytest.mark.parametrize("est", DECODERS, ids=lambda e: type(e).__name__)
def test_params_round_trip_through_clone(est):
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert c is not est


def test_set_params():
    est = LogSumDecoder().set_params(epsilon_smooth=0.1)
    assert est.get_params()["epsilon_smooth"] == 0.1


@pytest.mark.parametrize("est", DECODERS, ids=lambda e: type(e).__name__)
def test_fit_predict_score(est):
    A, x, tau, b = make_instance(8, 16, 1, 1e-3, 0)
    est = clone(est).fit(A, b, thresholds=tau)
    assert est.consistency_ok_ and est.n_features_in_ == 8
    assert est.score(A, b, thresholds=tau) == 1.0
    assert np.allclose(est.predict(A), A @ est.coef_)
    assert np.linalg.norm(est.coef_ - x.dense()) < 0.05


def test_l1_estimator_matches_function():
    A, _, tau, b = make_instance(10, 20, 2, 0.01, 3)
    assert np.array_equal(L1Decoder().fit(A, b, tau).coef_, decode_l1(A, tau, b).xhat)


def test_logsum_estimator_exposes_trace():
    A, _, tau, b = make_instance(10, 20, 2, 0.01, 3)
    est = LogSumDecoder().fit(A, b, tau)
    assert est.objective_trace_[-1] == est.objective_
    assert est.n_iter_ == len(est.objective_trace_)


def test_unfitted_and_mismatched_inputs():
    with pytest.raises(NotFittedError):
        L1Decoder().predict(np.ones((2, 3)))
    A, _, tau, b = make_instance(6, 10, 1, 0.1, 1)
    est = L1Decoder().fit(A, b, tau)
    with pytest.raises(InvalidArgumentError):
        est.predict(np.ones((2, 5)))
    with pytest.raises(InvalidArgumentError):
        L1Decoder().fit(A, b[:-1], tau)


def test_scalar_threshold():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(12, 5))
    est = L1Decoder().fit(A, -np.ones(12), thresholds=0.5)
    assert not est.coef_.any()


def test_adaptive_estimator():
    rng = np.random.default_rng(4)
    x = gen_sparse_signal(50, 2, rng)
    A = gen_gaussian_matrix(40, 50, rng).entries
    est = AdaptiveOneBitRecovery(random_state=3).fit(A, Encoder.from_signal(A, x), x_true=x)
    assert est.n_rounds_ == est.trace_.rounds_used
    assert est.stop_reason_ in ("tolerance", "max_rounds")
    assert est.predict(A).shape == (40,)
    assert clone(est).get_params()["random_state"] == 3

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance
from onebitcs.decoders import (
    LogSumConfig,
    decode_l0_bruteforce,
    decode_l1,
    decode_logsum,
    decode_weighted_l1,
    is_consistent,
    logsum_objective,
    nmse,
    sparsify,
    support_of,
)
from onebitcs.exceptions import (
    InfeasibleAtSparsityError,
    InfeasibleMeasurementsError,
    InvalidArgumentError,
    TooLargeError,
)

seeds = st.integers(0, 2**32 - 1)


def test_zero_is_optimal_when_every_threshold_is_positive():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(10, 6))
    tau = rng.random(10) + 0.1
    res = decode_l1(A, tau, -np.ones(10))
    assert res.objective == 0.0
    assert not res.xhat.any()


def test_pinned_tiny_instance_recovers_signal():
    # seed 0 was checked against the l0 oracle, which lands within 1e-4
    A, x, tau, b = make_instance(6, 12, 1, 1e-4, 0, sign=-1)
    assert np.linalg.norm(decode_l1(A, tau, b).xhat - x.dense()) <= 1e-2
    assert np.linalg.norm(decode_l0_bruteforce(A, tau, b, 1).xhat - x.dense()) <= 1e-2


def test_small_deviation_gives_tiny_nmse():
    errs = []
    for s in range(15):
        A, x, tau, b = make_instance(50, 100, 3, 1e-3, 100 + s)
        errs.append(decode_l1(A, tau, b).nmse(x.dense()))
    assert np.mean(errs) <= 1e-4


def test_unit_weights_match_l1_bitwise():
    A, _, tau, b = make_instance(20, 30, 2, 0.01, 5)
    a = decode_l1(A, tau, b)
    w = decode_weighted_l1(A, tau, b, np.ones(20))
    assert a.xhat.tobytes() == w.xhat.tobytes()
    assert a.objective == w.objective


def test_weights_steer_support():
    A, x, tau, b = make_instance(20, 40, 2, 1e-3, 9)
    w = np.full(20, 1e6)
    w[x.support] = 0.0
    res = decode_weighted_l1(A, tau, b, w)
    assert set(support_of(res.xhat)) <= set(x.support.tolist())
    assert res.consistency_ok


def test_zero_weights_give_any_feasible_point():
    A, _, tau, b = make_instance(10, 15, 2, 0.1, 2)
    res = decode_weighted_l1(A, tau, b, np.zeros(10))
    assert res.objective == 0.0
    assert is_consistent(A, tau, b, res.xhat)


def test_negative_weights_rejected():
    A, _, tau, b = make_instance(4, 6, 1, 0.1, 2)
    with pytest.raises(InvalidArgumentError):
        decode_weighted_l1(A, tau, b, -np.ones(4))


def test_contradictory_bits_are_infeasible():
    A = np.array([[1.0, 2.0], [1.0, 2.0]])
    tau = np.array([0.5, 0.5])
    with pytest.raises(InfeasibleMeasurementsError):
        decode_l1(A, tau, np.array([1.0, -1.0]))
    with pytest.raises(InfeasibleMeasurementsError):
        decode_logsum(A, tau, np.array([1.0, -1.0]))


def test_bad_shapes_rejected():
    with pytest.raises(InvalidArgumentError):
        decode_l1(np.ones((3, 2)), np.zeros(2), np.ones(3))
    with pytest.raises(InvalidArgumentError):
        decode_l1(np.ones((3, 2)), np.zeros(3), np.array([1.0, 0.0, 1.0]))


def test_logsum_fixed_point():
    # identity sensing: the l1 point is a vertex no reweighting can move
    A = np.eye(5)
    tau = np.array([2.0, 0.5, 0.5, -1.0, 0.5])
    b = np.array([1.0, -1.0, -1.0, 1.0, -1.0])
    l1 = decode_l1(A, tau, b)
    ls = decode_logsum(A, tau, b)
    assert ls.outer_iterations <= 2
    assert np.allclose(ls.xhat, l1.xhat, atol=1e-12)


def test_logsum_similar_to_l1():
    r1, rl = [], []
    for s in range(12):
        A, x, tau, b = make_instance(50, 80, 3, 0.01, 300 + s)
        r1.append(decode_l1(A, tau, b).nmse(x.dense()))
        rl.append(decode_logsum(A, tau, b).nmse(x.dense()))
    # same order of magnitude on average
    assert abs(np.log10(np.mean(r1)) - np.log10(np.mean(rl))) < 1.0


def test_logsum_config_validation():
    for kw in (dict(epsilon_smooth=0.0), dict(max_outer=0), dict(weight_floor=-1.0)):
        with pytest.raises(InvalidArgumentError):
            LogSumConfig(**kw)


def test_logsum_single_pass_is_l1():
    A, _, tau, b = make_instance(15, 20, 2, 0.1, 3)
    res = decode_logsum(A, tau, b, LogSumConfig(max_outer=1))
    assert np.array_equal(res.xhat, decode_l1(A, tau, b).xhat)
    assert res.objective_trace == [logsum_objective(res.xhat, 0.01)]


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([0.1, 0.01, 0.001]), st.sampled_from([1e-3, 1e-2, 0.1]))
def test_logsum_trace_never_increases(seed, a, eps):
    A, _, tau, b = make_instance(20, 25, 2, a, seed)
    res = decode_logsum(A, tau, b, LogSumConfig(epsilon_smooth=eps))
    assert np.all(np.diff(res.objective_trace) <= 1e-10)
    assert res.objective == res.objective_trace[-1]


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([1, 0.1, 1e-3]), st.booleans())
def test_every_solution_is_sign_consistent(seed, a, minus):
    A, _, tau, b = make_instance(12, 20, 2, a, seed, sign=-1 if minus else 1)
    for res in (decode_l1(A, tau, b), decode_logsum(A, tau, b, LogSumConfig(max_outer=3))):
        assert res.consistency_ok
        assert is_consistent(A, tau, b, res.xhat)


def test_l0_zero_when_zero_is_consistent():
    A = np.random.default_rng(1).normal(size=(6, 5))
    res = decode_l0_bruteforce(A, np.full(6, 0.3), -np.ones(6), 2)
    assert res.support == () and not res.xhat.any()


def test_l0_finds_true_support_on_tiny_instance():
    A, x, tau, b = make_instance(8, 10, 1, 1e-3, 0, sign=-1)
    res = decode_l0_bruteforce(A, tau, b, 1)
    assert res.support == tuple(x.support.tolist())
    assert res.consistency_ok


def test_l0_guard_and_sparsity_cap():
    A = np.ones((3, 200))
    with pytest.raises(TooLargeError):
        decode_l0_bruteforce(A, np.zeros(3), np.ones(3), 10)
    A, _, tau, b = make_instance(6, 10, 2, 1e-3, 4)
    with pytest.raises(InfeasibleAtSparsityError):
        decode_l0_bruteforce(A, tau, b, 0)
    with pytest.raises(InvalidArgumentError):
        decode_l0_bruteforce(A, tau, b, 7)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([1.0, 0.1, 1e-3]))
def test_l0_never_denser_than_truncated_l1(seed, a):
    A, _, tau, b = make_instance(7, 10, 1, a, seed)
    l1 = decode_l1(A, tau, b)
    k1 = np.count_nonzero(sparsify(l1.xhat, 1e-6))
    l0 = decode_l0_bruteforce(A, tau, b, k1)
    assert np.count_nonzero(l0.xhat) <= k1


def test_sparsify_and_metrics():
    z = np.array([1.0, 1e-7, -0.5, 0.0])
    assert support_of(z) == (0, 2)
    assert np.array_equal(sparsify(z), [1.0, 0.0, -0.5, 0.0])
    assert nmse(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 1.0

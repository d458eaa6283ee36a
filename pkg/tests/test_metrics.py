import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgcrl.metrics import (
    DegenerateNormalization,
    auc,
    average_performance,
    avg_return_per_episode,
    forgetting,
    forward_transfer,
    iqm,
    pad_curves,
    stratified_bootstrap_ci,
)
from dgcrl.numerics import ContractError
from dgcrl.rng import Rng

curve_sets = st.lists(st.lists(st.floats(-200, 0), min_size=1, max_size=30),
                      min_size=1, max_size=6)


def test_average_performance():
    assert average_performance([-5.0] * 7) == -5.0
    assert average_performance([-3.25]) == -3.25
    assert average_performance([-10, -20, -30]) == -20
    with pytest.raises(ContractError):
        average_performance([-1.0, float("nan")])


def test_auc_examples():
    assert auc([-7.0] * 5, C=100) == 93.0
    assert auc([0.0, 2.0]) == 1.0


def test_auc_against_trapezoid():
    stream = Rng(0).stream("x")
    for _ in range(200):
        n = stream.integers(48) + 2
        f = np.cumsum(stream.normal(3.0, size=n))
        trap = np.sum((f[1:] + f[:-1]) / 2) / (n - 1)
        slack = np.max(np.abs(np.diff(f))) / 2
        assert abs(auc(f) - trap) <= slack + 1e-12


def test_forward_transfer_hand_example():
    # AUCs with C are (4, 2) for the candidate and (2, 2) for the reference
    per_task, mean = forward_transfer([[3.0], [1.0]], [[1.0], [1.0]], C=1.0)
    assert per_task == [1.0, 0.0] and mean == 0.5


def test_forward_transfer_negative_when_below():
    per_task, _ = forward_transfer([[1.0], [5.0]], [[2.0], [5.0]], C=0.0)
    assert per_task[0] < 0


def test_forward_transfer_degenerate():
    with pytest.raises(DegenerateNormalization):
        forward_transfer([[1.0]], [[2.0]])


def test_forward_transfer_length_mismatch():
    with pytest.raises(ContractError):
        forward_transfer([[1.0]], [[1.0], [2.0]])


def test_forward_transfer_self_is_zero_random_sets():
    stream = Rng(5).stream("x")
    for _ in range(20):
        curves = [stream.uniform(-200, 0, size=100) for _ in range(10)]
        assert forward_transfer(curves, curves, C=100.0) == ([0.0] * 10, 0.0)


@settings(max_examples=50, deadline=None)
@given(curves=curve_sets, C=st.floats(0, 300))
def test_forward_transfer_self_is_zero(curves, C):
    per_task, mean = forward_transfer(curves, curves, C)
    assert mean == 0 and all(v == 0 for v in per_task)


@settings(max_examples=50, deadline=None)
@given(curves=curve_sets, shift=st.floats(-50, 50))
def test_auc_shift(curves, shift):
    for c in curves:
        moved = [v + shift for v in c]
        assert auc(moved, 100.0 - shift) == pytest.approx(auc(c, 100.0), abs=1e-9)


def test_forgetting():
    assert forgetting([-3.0, -4.0], [-3.0, -4.0]) == ([0.0, 0.0], 0.0)
    assert forgetting([-10.0], [-15.0]) == ([5.0], 5.0)
    per_task, _ = forgetting([-15.0], [-10.0])
    assert per_task[0] < 0
    with pytest.raises(ContractError):
        forgetting([-1.0, None], [-1.0, -1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 0), st.floats(-100, 0)), min_size=1, max_size=10))
def test_forgetting_antisymmetric(pairs):
    a, b = [p[0] for p in pairs], [p[1] for p in pairs]
    assert forgetting(a, b)[0] == [-v for v in forgetting(b, a)[0]]


def test_padding_and_average():
    np.testing.assert_array_equal(avg_return_per_episode([[1.0, 2.0, 3.0]]), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(avg_return_per_episode([[2.0] * 4, [4.0] * 4]), [3.0] * 4)
    padded = pad_curves([[1.0], [1.0, 2.0, 5.0]])
    np.testing.assert_array_equal(padded, [[1.0, 1.0, 1.0], [1.0, 2.0, 5.0]])


def test_iqm_examples():
    assert iqm([1, 2, 3, 4]) == 2.5
    assert iqm([7.5] * 9) == 7.5
    assert iqm([0, 0, 0, 100]) == 0
    with pytest.raises(ContractError):
        iqm([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_iqm_bounds(values):
    assert min(values) - 1e-6 <= iqm(values) <= max(values) + 1e-6


def test_iqm_symmetric_is_median():
    assert iqm([-3, -1, 0, 1, 3]) == 0
    assert iqm([2, 4, 6, 8, 10, 12, 14, 16]) == 9


def test_average_performance_permutation_invariant():
    vals = [-1.5, -30.25, -7.0, -0.125]
    assert average_performance(vals) == average_performance(vals[::-1])


def test_bootstrap_identical_seeds():
    lo, hi = stratified_bootstrap_ci([[-4.0, -2.0]] * 3, Rng(0).stream("bootstrap"))
    assert lo == hi == -3.0


def test_bootstrap_deterministic():
    data = Rng(1).stream("x").normal(size=(5, 4))
    a = stratified_bootstrap_ci(data, Rng(7).stream("bootstrap"), resamples=500)
    b = stratified_bootstrap_ci(data, Rng(7).stream("bootstrap"), resamples=500)
    assert a == b


def test_bootstrap_contains_point_estimate():
    stream = Rng(2).stream("x")
    for _ in range(100):
        half = stream.normal(size=(3, 4))
        data = np.vstack([half, -half])  # symmetric about 0 within every task
        lo, hi = stratified_bootstrap_ci(data, Rng(3).stream("bootstrap"), resamples=300)
        assert lo <= iqm(data) <= hi


def test_bootstrap_needs_two_seeds():
    with pytest.raises(ContractError):
        stratified_bootstrap_ci([[1.0, 2.0]], Rng(0).stream("bootstrap"))

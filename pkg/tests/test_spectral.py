import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ncmap.spectral import (
    ConvergenceFailure,
    NotNormal,
    NotSkewSymmetric,
    normal_block_diagonalize,
    orthogonality_defect,
    skew_block_diagonalize,
    skew_deltas,
)


def test_rotation_generator_is_already_in_block_form():
    spec = skew_block_diagonalize([[0.0, -1.0], [1.0, 0.0]])
    assert spec.pairs == ((0.0, 1.0),)
    np.testing.assert_allclose(spec.theta, np.eye(2), atol=1e-14)


def test_zero_matrix_is_all_zero_blocks():
    spec = skew_block_diagonalize(np.zeros((3, 3)))
    assert spec.pairs == () and spec.zero_count == 3


def test_identity_off_diagonal_target():
    I, Z = np.eye(2), np.zeros((2, 2))
    spec = skew_block_diagonalize(np.block([[Z, -I], [I, Z]]))
    np.testing.assert_allclose(spec.pairs, [(0, 1), (0, 1)], atol=1e-12)


def test_scaled_identity_pairs_equal_reals():
    spec = normal_block_diagonalize(3 * np.eye(3))
    assert spec.pairs == ((3.0, 0.0),)
    assert spec.singles == (3.0,)


def test_normal_diagonal_target():
    I = np.eye(2)
    T = np.block([[0.5 * I, -I], [I, 0.5 * I]])
    spec = normal_block_diagonalize(T)
    np.testing.assert_allclose(spec.pairs, [(0.5, 1), (0.5, 1)], atol=1e-12)


def test_rejects_non_skew_and_non_normal():
    with pytest.raises(NotSkewSymmetric):
        skew_block_diagonalize([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NotNormal):
        normal_block_diagonalize([[1.0, 1.0], [0.0, 1.0]])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_input_fails_to_converge():
    C = np.array([[0.0, -np.inf], [np.inf, 0.0]])
    with pytest.raises((ConvergenceFailure, NotSkewSymmetric)):
        skew_block_diagonalize(C)


def test_deltas_match_eigvals_oracle():
    rng = np.random.default_rng(3)
    for p in range(1, 40):
        A = rng.standard_normal((p, p))
        C = A - A.T
        ev = np.sort(np.abs(np.linalg.eigvals(C).imag))[::-1][0::2]
        np.testing.assert_allclose(skew_deltas(C), ev, atol=1e-10)


skew_inputs = st.integers(1, 12).flatmap(
    lambda p: arrays(np.float64, (p, p), elements=st.floats(-5, 5, allow_nan=False, width=64))
)


@settings(max_examples=60, deadline=None)
@given(skew_inputs)
def test_skew_form_is_certified(A):
    C = A - A.T
    spec = skew_block_diagonalize(C)
    assert orthogonality_defect(spec.theta) <= 1e-9
    resid = np.abs(spec.theta.T @ C @ spec.theta - spec.block_matrix()).max(initial=0.0)
    assert resid <= 1e-8 * max(1.0, np.abs(C).max(initial=0.0))
    assert all(d >= 0 for d in spec.deltas)
    assert np.all(np.diff(spec.deltas) <= 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.data())
def test_normal_form_of_rotated_blocks(q, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    gam = rng.uniform(-2, 2, q)
    dlt = rng.uniform(0.1, 3, q)
    B = np.zeros((2 * q, 2 * q))
    for k in range(q):
        B[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[gam[k], -dlt[k]], [dlt[k], gam[k]]]
    O, _ = np.linalg.qr(rng.standard_normal((2 * q, 2 * q)))
    T = O @ B @ O.T
    spec = normal_block_diagonalize(T)
    assert np.abs(spec.theta.T @ T @ spec.theta - spec.block_matrix()).max() < 1e-8
    np.testing.assert_allclose(sorted(spec.deltas), sorted(dlt), atol=1e-8)

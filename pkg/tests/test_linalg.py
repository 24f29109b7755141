import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cartanflow.linalg import (
    NegativeDeterminantError,
    NoConvergenceError,
    NotOrthogonalError,
    RankDeficientError,
    as_skew,
    check_special_orthogonal,
    frobenius,
    qr_decompose,
    skew_exp,
    so_log,
    symmetric_eigen,
)


def random_skew(n, rng, spectral_cap=None):
    a = as_skew(rng.standard_normal((n, n)))
    if spectral_cap is not None:
        top = np.max(np.abs(np.linalg.eigvals(a)))
        if top > 0:
            a *= spectral_cap / top
    return a


def taylor_exp(a, terms=60):
    """Independent oracle: truncated Taylor series with compensated summation."""
    n = a.shape[0]
    total = np.zeros((n, n))
    comp = np.zeros((n, n))
    term = np.eye(n)
    for k in range(terms):
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        term = term @ a / (k + 1)
    return total


# ---------------------------------------------------------------- qr_decompose

def test_qr_identity():
    q, r = qr_decompose(np.eye(2))
    assert np.allclose(q, np.eye(2))
    assert np.allclose(r, np.eye(2))


def test_qr_unit_column():
    x = np.array([[1.0], [0.0]])
    q, r = qr_decompose(x)
    assert np.allclose(q, np.eye(2))
    assert np.allclose(r, x)


def test_qr_random_residual():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 3))
    q, r = qr_decompose(x)
    assert frobenius(x - q @ r) / frobenius(x) < 1e-12
    assert frobenius(q.T @ q - np.eye(5)) < 1e-12
    assert np.allclose(np.tril(r, -1), 0.0)


def test_qr_sign_convention_and_determinism():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((6, 4))
    q1, r1 = qr_decompose(x)
    q2, r2 = qr_decompose(x.copy())
    assert np.all(np.diag(r1)[:4] >= 0)
    assert np.array_equal(q1, q2) and np.array_equal(r1, r2)


def test_qr_rank_deficient_raises():
    x = np.zeros((4, 2))
    x[:, 0] = [1.0, 2.0, 3.0, 4.0]
    x[:, 1] = 2.0 * x[:, 0]
    with pytest.raises(RankDeficientError):
        qr_decompose(x)


def test_qr_span_projector():
    rng = np.random.default_rng(12)
    for _ in range(5):
        x = rng.standard_normal((7, 3))
        q, _ = qr_decompose(x)
        qk = q[:, :3]
        p_x = x @ np.linalg.inv(x.T @ x) @ x.T
        assert frobenius(qk @ qk.T - p_x) < 1e-8


# ------------------------------------------------------------- symmetric_eigen

def test_eigen_diagonal_input():
    w, v = symmetric_eigen(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1.0, 2.0, 3.0])
    assert np.allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]])


def test_eigen_analytic_2x2():
    w, v = symmetric_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(w, [-1.0, 1.0])
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for col, expect in zip(v.T, ([inv_sqrt2, -inv_sqrt2], [inv_sqrt2, inv_sqrt2])):
        assert np.allclose(np.abs(col), np.abs(expect))


def test_eigen_random_reconstruction():
    rng = np.random.default_rng(1)
    s = rng.standard_normal((8, 8))
    s = (s + s.T) / 2.0
    w, v = symmetric_eigen(s)
    assert frobenius(s @ v - v @ np.diag(w)) < 1e-10
    assert frobenius(v.T @ v - np.eye(8)) < 1e-12
    assert np.all(np.diff(w) >= 0)


def test_eigen_charpoly_roots_3x3():
    # Oracle: roots of the characteristic polynomial via Faddeev-LeVerrier
    # coefficients, solved independently by numpy's companion-matrix roots.
    rng = np.random.default_rng(2)
    for _ in range(10):
        s = rng.standard_normal((3, 3))
        s = (s + s.T) / 2.0
        tr = np.trace(s)
        c2 = -tr
        c1 = 0.5 * (tr**2 - np.trace(s @ s))
        c0 = -np.linalg.det(s)
        roots = np.sort(np.roots([1.0, c2, c1, c0]).real)
        w, _ = symmetric_eigen(s)
        assert np.allclose(w, roots, atol=1e-9)


def test_eigen_rejects_asymmetric():
    with pytest.raises(ValueError):
        symmetric_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigen_zero_matrix():
    w, v = symmetric_eigen(np.zeros((3, 3)))
    assert np.allclose(w, 0.0)
    assert np.allclose(v, np.eye(3))


# ------------------------------------------------------------------- skew_exp

def test_skew_exp_zero():
    assert np.allclose(skew_exp(np.zeros((3, 3))), np.eye(3))


def test_skew_exp_planar_rotation():
    a = np.array([[0.0, -np.pi / 2], [np.pi / 2, 0.0]])
    expect = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(skew_exp(a), expect, atol=1e-14)


def test_skew_exp_matches_taylor():
    rng = np.random.default_rng(2)
    a = random_skew(6, rng)
    a *= 1.0 / frobenius(a)
    assert frobenius(skew_exp(a) - taylor_exp(a)) < 1e-12


@pytest.mark.parametrize("scale", [0.1, 1.0, 10.0, 50.0])
def test_skew_exp_orthogonality_large_norm(scale):
    rng = np.random.default_rng(3)
    a = random_skew(5, rng)
    a *= scale / frobenius(a)
    q = skew_exp(a)
    assert frobenius(q.T @ q - np.eye(5)) < 1e-10
    assert abs(np.linalg.det(q) - 1.0) < 1e-10


# --------------------------------------------------------------------- so_log

def test_so_log_identity():
    assert np.allclose(so_log(np.eye(3)), 0.0)


def test_so_log_planar():
    q = np.array([[0.0, -1.0], [1.0, 0.0]])
    expect = np.array([[0.0, -np.pi / 2], [np.pi / 2, 0.0]])
    assert np.allclose(so_log(q), expect, atol=1e-12)


def test_so_log_roundtrip_seeded():
    rng = np.random.default_rng(3)
    a = random_skew(5, rng, spectral_cap=0.9 * np.pi)
    assert frobenius(so_log(skew_exp(a)) - a) < 1e-8


@pytest.mark.parametrize("q,n", [
    (np.diag([-1.0, -1.0, 1.0]), 3),
    (-np.eye(4), 4),
    (np.diag([-1.0, -1.0, -1.0, -1.0, 1.0]), 5),
])
def test_so_log_theta_pi_blocks(q, n):
    a = so_log(q)
    assert frobenius(a + a.T) < 1e-14
    assert frobenius(skew_exp(a) - q) < 1e-8
    eig = np.linalg.eigvals(a)
    assert np.max(np.abs(eig.imag)) <= np.pi + 1e-12


def test_so_log_mixed_angles_including_pi():
    # Block-diagonal with rotation angles pi, 0.3, and a fixed axis.
    def rot(t):
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])

    q = np.zeros((5, 5))
    q[:2, :2] = rot(np.pi)
    q[2:4, 2:4] = rot(0.3)
    q[4, 4] = 1.0
    a = so_log(q)
    assert frobenius(skew_exp(a) - q) < 1e-8


def test_so_log_near_pi_angle():
    rng = np.random.default_rng(9)
    a = random_skew(4, rng, spectral_cap=np.pi - 1e-6)
    q = skew_exp(a)
    b = so_log(q)
    assert frobenius(skew_exp(b) - q) < 1e-8


def test_so_log_rejects_non_orthogonal():
    with pytest.raises(NotOrthogonalError):
        so_log(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_so_log_rejects_reflection():
    with pytest.raises(NegativeDeterminantError):
        so_log(np.diag([1.0, 1.0, -1.0]))


# ------------------------------------------------------------------ properties

@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=2**32 - 1))
def test_property_principal_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    a = random_skew(n, rng, spectral_cap=0.89 * np.pi)
    assert frobenius(so_log(skew_exp(a)) - a) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=2**32 - 1))
def test_property_exp_log_identity_on_group(n, seed):
    rng = np.random.default_rng(seed)
    a = random_skew(n, rng, spectral_cap=2.5 * np.pi)  # wraps past the principal branch
    q = skew_exp(a)
    b = so_log(q)
    assert frobenius(skew_exp(b) - q) < 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6),
       st.integers(min_value=0, max_value=2**32 - 1))
def test_property_qr_reconstructs(n_extra, k, seed):
    n = k + n_extra
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, k))
    q, r = qr_decompose(x)
    assert frobenius(x - q @ r) < 1e-10 * max(1.0, frobenius(x))
    assert frobenius(q.T @ q - np.eye(n)) < 1e-12


def test_as_skew_symmetrizes():
    a = np.array([[1.0, 2.0], [0.0, -1.0]])
    s = as_skew(a)
    assert np.allclose(s, -s.T)
    assert s[0, 1] == 1.0


def test_check_special_orthogonal_accepts_rotation():
    q = skew_exp(random_skew(4, np.random.default_rng(5)))
    check_special_orthogonal(q)

import numpy as np
import pytest

from cqmlab import numerics as nm

from conftest import power_iteration_opnorm


def test_eig_identity():
    w, v = nm.hermitian_eig(np.eye(3, dtype=complex))
    assert np.allclose(w, [1, 1, 1])


def test_eig_diagonal_sorted():
    w, _ = nm.hermitian_eig(np.diag([2.0, -3.0]).astype(complex))
    assert np.allclose(w, [-3.0, 2.0])


def test_eig_reconstruction_random(rng):
    a = nm.random_hermitian(rng, 4)
    w, v = nm.hermitian_eig(a)
    assert np.max(np.abs((v * w) @ v.conj().T - a)) < 1e-9


def test_eig_reconstruction_battery(rng):
    # 1000 random instances across dimensions up to 16
    for _ in range(1000):
        d = int(rng.integers(1, 17))
        a = nm.random_hermitian(rng, d, scale=float(rng.uniform(0.1, 10)))
        w, v = nm.hermitian_eig(a)
        resid = np.max(np.abs((v * w) @ v.conj().T - a))
        assert resid < 1e-9 * (1.0 + nm.op_norm(a))


def test_eig_rejects_non_hermitian():
    with pytest.raises(nm.NumericsError):
        nm.hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_op_norm_trivial():
    assert nm.op_norm(np.eye(2, dtype=complex)) == pytest.approx(1.0)
    assert nm.op_norm(np.diag([2.0, -3.0]).astype(complex)) == pytest.approx(3.0)


def test_op_norm_power_iteration_oracle(rng):
    a = nm.random_hermitian(rng, 5)
    assert nm.op_norm(a) == pytest.approx(power_iteration_opnorm(a), abs=1e-8)


def test_op_norm_axioms(rng):
    for _ in range(50):
        a = nm.random_hermitian(rng, 4)
        b = nm.random_hermitian(rng, 4)
        lam = float(rng.normal())
        assert nm.op_norm(a + b) <= nm.op_norm(a) + nm.op_norm(b) + 1e-10
        assert nm.op_norm(lam * a) == pytest.approx(abs(lam) * nm.op_norm(a), rel=1e-10)


def test_quotient_norm_identity_multiples():
    for d in (1, 2, 5):
        assert nm.quotient_norm(3.7 * np.eye(d, dtype=complex)) == pytest.approx(0.0, abs=1e-12)


def test_quotient_norm_grid_oracle():
    a = np.diag([1.0, 0.0]).astype(complex)
    grid = np.linspace(-2, 3, 2001)
    oracle = min(nm.op_norm(a - lam * np.eye(2)) for lam in grid)
    assert nm.quotient_norm(a) == pytest.approx(0.5, abs=1e-12)
    assert nm.quotient_norm(a) == pytest.approx(oracle, abs=1e-5)


def test_quotient_norm_translation_invariance(rng):
    a = nm.random_hermitian(rng, 4)
    assert nm.quotient_norm(a + 7.0 * np.eye(4)) == pytest.approx(nm.quotient_norm(a))
    assert nm.quotient_norm(a) <= nm.op_norm(a) + 1e-12


def test_matrix_exp_skew_zero(rng):
    h = nm.random_hermitian(rng, 3)
    assert np.allclose(nm.matrix_exp_skew(h, 0.0), np.eye(3))


def test_matrix_exp_skew_diagonal():
    u = nm.matrix_exp_skew(np.diag([np.pi, 0.0]).astype(complex), 1.0)
    assert np.allclose(u, np.diag([-1.0, 1.0]), atol=1e-12)


def test_matrix_exp_skew_inverse(rng):
    h = nm.random_hermitian(rng, 4)
    u = nm.matrix_exp_skew(h, 0.7)
    v = nm.matrix_exp_skew(h, -0.7)
    assert np.max(np.abs(u @ v - np.eye(4))) < 1e-9


def test_batched_norms(rng):
    stack = np.array([nm.random_hermitian(rng, 3) for _ in range(7)])
    batch = nm.op_norms(stack)
    single = [nm.op_norm(m) for m in stack]
    assert np.allclose(batch, single)
    qb = nm.quotient_norms(stack)
    qs = [nm.quotient_norm(m) for m in stack]
    assert np.allclose(qb, qs)

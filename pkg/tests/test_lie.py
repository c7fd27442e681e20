import numpy as np
import pytest

from gq.poisson import lie
from gq.poisson.lie import (
    LieError,
    build_element,
    compose_elements,
    iwasawa,
    is_sb,
    is_su,
    momentum_c,
    momentum_h,
    raction_crosscheck,
    su_sb_split,
)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


# Iwasawa


@pytest.mark.parametrize("order", ["SU.SB", "SB.SU"])
def test_iwasawa_random(rng, order):
    for n in (1, 2, 3, 4):
        for _ in range(50):
            d = lie.random_sl(rng, n)
            f1, f2 = iwasawa(d, order)
            u, b = (f1, f2) if order == "SU.SB" else (f2, f1)
            assert is_su(u) and is_sb(b)
            assert np.abs(f1 @ f2 - d).max() <= 1e-10


def test_iwasawa_trivial_cases(rng):
    I = np.eye(3, dtype=complex)
    u, b = iwasawa(I)
    assert np.allclose(u, I) and np.allclose(b, I)
    g = lie.random_su(rng, 2)
    u, b = iwasawa(g)
    assert np.abs(u - g).max() <= 1e-12 and np.abs(b - I).max() <= 1e-12
    d = np.diag([2.0, 0.5]).astype(complex)
    u, b = iwasawa(d)
    assert np.allclose(u, np.eye(2)) and np.allclose(b, d)


def test_iwasawa_rejects_non_sl():
    with pytest.raises(LieError):
        iwasawa(np.diag([2.0, 2.0]))
    with pytest.raises(LieError):
        iwasawa(np.ones((2, 3)))
    with pytest.raises(LieError):
        iwasawa(np.eye(2), "QR")


# su + sb split


def test_split_examples(rng):
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    A = A - A.conj().T
    A -= np.trace(A) / 3 * np.eye(3)
    su, sb = su_sb_split(A)
    assert np.abs(su - A).max() <= 1e-15 and np.abs(sb).max() <= 1e-15
    U = np.triu(rng.standard_normal((3, 3)), 1).astype(complex)
    su, sb = su_sb_split(U)
    assert np.abs(su).max() == 0 and np.array_equal(sb, U)


def test_split_projection(rng):
    for _ in range(20):
        X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        X -= np.trace(X) / 4 * np.eye(4)
        su, sb = su_sb_split(X)
        assert np.abs(su + sb - X).max() <= 1e-14
        assert np.abs(su + su.conj().T).max() <= 1e-14
        assert np.abs(np.tril(sb, -1)).max() == 0 and np.abs(np.diag(sb).imag).max() <= 1e-15
        su2, sb2 = su_sb_split(su)
        assert np.abs(su2 - su).max() <= 1e-14 and np.abs(sb2).max() <= 1e-14


def test_split_rejects_trace():
    with pytest.raises(LieError):
        su_sb_split(np.eye(2))


# momentum maps


def test_momentum_h():
    assert np.array_equal(momentum_h(np.eye(3)), np.zeros(2))
    a = 0.7
    assert momentum_h(np.diag([np.exp(a), np.exp(-a)])) == pytest.approx([a])
    uni = np.eye(3, dtype=complex) + np.triu(np.ones((3, 3)), 1)
    assert np.array_equal(momentum_h(uni), np.zeros(2))
    with pytest.raises(LieError):
        momentum_h(np.diag([-1.0, -1.0]))


def test_momentum_h_additive(rng):
    for n in (1, 2, 3):
        for _ in range(20):
            a, b = lie.random_sb(rng, n), lie.random_sb(rng, n)
            assert np.abs(momentum_h(a @ b) - momentum_h(a) - momentum_h(b)).max() <= 1e-10


def test_momentum_c(rng):
    for t in (0.0, 0.3, 1.0):
        assert momentum_c(lie.sigma_t(2, t), t) == pytest.approx([1.0, 1.0])
    assert momentum_c(np.eye(3), 0.0) == pytest.approx([1.0, 1.0])
    for _ in range(20):
        c = momentum_c(lie.random_su(rng, 3), 0.4)
        assert (np.diff(c) >= -1e-15).all() and 0 <= c[0] and c[-1] <= 1 + 1e-15


def test_block_su_lies_on_wall(rng):
    for n in (1, 2, 3):
        for k in range(1, n + 1):
            g = lie.block_su(rng, n, k)
            assert is_su(g)
            for t in (0.0, 0.25, 0.9):
                assert momentum_c(g, t)[k - 1] == pytest.approx(1 - t, abs=1e-12)


# groupoid elements


def test_zero_xi_is_trivial_arrow(rng):
    g = lie.random_su(rng, 2)
    el = build_element(g, np.zeros((3, 3)), 0.5)
    assert np.abs(el.gamma - np.eye(3)).max() <= 1e-12
    assert np.abs(el.u0 - g).max() <= 1e-12
    cc = raction_crosscheck(g, np.zeros((3, 3)), 0.5)
    assert cc.residual <= 1e-12 and np.abs(cc.h).max() <= 1e-12


def test_xi_shape_enforced(rng):
    bad = np.zeros((3, 3), dtype=complex)
    bad[1, 2] = 1.0
    with pytest.raises(LieError):
        build_element(lie.random_su(rng, 2), bad, 0.5)


def test_reconstruction(rng):
    for n in (1, 2, 3):
        for t in (0.0, 0.5, 0.9):
            for _ in range(10):
                g, xi = lie.random_su(rng, n), lie.random_xi(rng, n)
                el = build_element(g, xi, t)
                assert is_sb(el.gamma) and is_su(el.u0)
                assert np.abs(g @ el.gamma - el.lam @ el.u0).max() <= 1e-10


@pytest.mark.parametrize("t", [0.0, 0.25, 0.5, 0.9])
def test_raction(rng, t):
    for n in (1, 2, 3):
        for _ in range(15):
            cc = raction_crosscheck(lie.random_su(rng, n), lie.random_xi(rng, n), t)
            assert cc.residual <= 1e-8
            assert cc.invariance_ok


def test_literal_normalization_does_not_match(rng):
    # the unscaled log det_k cocycle misses the action formula by O(1)
    cc = raction_crosscheck(lie.random_su(rng, 2), lie.random_xi(rng, 2, 1.5), 0.5)
    assert cc.literal_residual > 1e-3 and cc.residual <= 1e-8


def test_raction_on_wall(rng):
    for k in (1, 2):
        g = lie.block_su(rng, 2, k)
        cc = raction_crosscheck(g, lie.random_xi(rng, 2), 0.25)
        assert cc.invariance_ok
        assert cc.c_tgt[k - 1] == pytest.approx(0.75, abs=1e-10)


def test_composed_cocycle_additive(rng):
    for n in (1, 2):
        g = lie.random_su(rng, n)
        e1 = build_element(g, lie.random_xi(rng, n), 0.3)
        e2 = build_element(e1.u0, lie.random_xi(rng, n), 0.3)
        e12 = compose_elements(e1, e2)
        assert np.abs(g @ e12.gamma - e12.lam @ e12.u0).max() <= 1e-10
        h12 = momentum_h(e12.gamma)
        assert np.abs(h12 - momentum_h(e1.gamma) - momentum_h(e2.gamma)).max() <= 1e-10
        # endpoint of the composite is the endpoint of the second factor
        c = momentum_c(e12.u0, 0.3)
        c0 = momentum_c(g, 0.3)
        kappa = lie.tensor_normalization()
        assert c == pytest.approx(lie.action_formula(c0, kappa * h12, 0.3), abs=1e-8)


# SU(2)


def test_dual_basis_gram():
    _, gram = lie.dual_su2_basis()
    assert np.abs(gram - np.eye(3)).max() <= 1e-14


def test_normalization_constant():
    assert lie.tensor_normalization() == pytest.approx(-2.0, abs=1e-12)


@pytest.mark.parametrize("y", [0j, 1 + 0j, 0.3 - 1.2j, 10 + 0j, -4 + 7j])
def test_su2_check(y):
    r = lie.su2_check(y)
    assert r.residual <= 1e-8
    assert r.theta_residual <= 1e-10
    assert r.omega_residual <= 1e-10
    assert r.gram_residual <= 1e-14


def test_su2_origin_tight():
    assert lie.su2_check(0j).residual <= 1e-12


def test_su2_large_y_closed_form():
    y = 10.0
    kappa = lie.tensor_normalization()
    assert lie.su2_projected(y) / kappa == pytest.approx(-(1 + y**2) / 2, rel=1e-10)


def test_sample_stream_reproducible():
    a = [r.random() for r in lie.sample_stream(7, 3)]
    b = [r.random() for r in lie.sample_stream(7, 3)]
    assert a == b and len(set(a)) == 3

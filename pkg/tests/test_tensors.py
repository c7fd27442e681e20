import numpy as np
import pytest

from gq.poisson import tensors as tz
from gq.poisson.tensors import (
    IDENTITY_TOLERANCES,
    field_with_derivative,
    identity_suite,
    jacobiator,
    lambda_sign,
    point_data,
    schouten,
    tensors_at,
)
from gq.suites import random_chart_point


def rng(seed=0):
    return np.random.default_rng(seed)


# chart


def test_chart_round_trip():
    r = rng(3)
    for n in (1, 2, 3, 4):
        for _ in range(20):
            y = r.standard_normal(n) * 2 + 1j * r.standard_normal(n) * 2
            assert np.abs(tz.y_from_z(tz.z_from_y(y)) - y).max() <= 1e-12
    assert np.array_equal(tz.z_from_y(np.zeros(3, complex)), np.zeros(3))


def test_n1_chart_is_identity():
    y = np.array([0.7 - 2.1j])
    assert tz.z_from_y(y) == pytest.approx(y)


def test_real_view_convention():
    x = tz.real_view([1 + 2j, 3 - 4j])
    assert x.tolist() == [1.0, 2.0, 3.0, -4.0]
    assert tz.complex_view(x).tolist() == [1 + 2j, 3 - 4j]


# tensors


def test_pi0_at_origin_n1():
    T = tensors_at(np.array([0j]), 0.0)
    # i d_y ^ d_ybar  ->  {u, v} = -1/2
    assert T.pi0[0, 1] == pytest.approx(-0.5)
    assert T.pi0[1, 0] == pytest.approx(0.5)


def test_pi0_closed_form_n1():
    y = 0.4 - 1.3j
    T = tensors_at(np.array([y]), 0.0)
    assert T.pi0[0, 1] == pytest.approx(-(1 + abs(y) ** 2) / 2)


def test_c_at_origin_and_unit_circle():
    assert np.array_equal(tz.c_values(np.zeros(2, complex)), np.zeros(2))
    y = np.array([np.exp(0.3j)])
    T = tensors_at(y, 0.4)
    assert T.c[0] == pytest.approx(0.5)
    s = T.sigma[0]
    assert T.J @ s == pytest.approx((T.c[0] - 1) * s)
    assert T.c[0] - 1 == pytest.approx(-0.5)


def test_structure_relations():
    T = tensors_at(np.array([0.3 + 0.1j, -0.5 + 0.2j]), 0.3)
    assert np.abs(T.J - T.pi0 @ T.omega).max() == 0.0
    assert np.abs(T.pi_t - T.pi0 - 0.3 * T.pi_lambda).max() <= 1e-15
    for M in (T.pi0, T.omega, T.pi_lambda, T.pi_t):
        assert np.abs(M + M.T).max() <= 1e-12
    assert T.I.shape == (2,)
    assert T.I[0] == pytest.approx(np.trace(T.J))


def test_lambda_sign_is_stable_over_samples():
    s = lambda_sign()
    assert s in (1, -1)
    r = rng(5)
    for n in (1, 2, 3):
        for _ in range(10):
            pd = point_data(random_chart_point(r, n))
            pl = s * np.linalg.inv(pd.omega)
            for k in range(n):
                assert np.abs(pl.T @ pd.dc[k] - pd.sigma[k]).max() <= 1e-8


def test_origin_is_torus_fixed_point():
    res = identity_suite(np.zeros(2, complex), 0.5)
    data = point_data(np.zeros(2, complex))
    assert np.abs(data.sigma).max() == 0.0
    for k, v in res.residuals.items():
        assert v <= 1e-14, k


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("t", [0.0, 0.3, 0.5, 1.0])
def test_identity_suite_random(n, t):
    r = rng(10 * n + int(10 * t))
    for _ in range(10):
        y = random_chart_point(r, n)
        res = identity_suite(y, t)
        assert res.passed, res.failures()


def test_modular_field_independent_of_t():
    r = rng(8)
    for _ in range(10):
        y = random_chart_point(r, 2)
        data = point_data(y)
        a = tz.modular_field(tensors_at(y, 0.0, data))
        b = tz.modular_field(tensors_at(y, 0.7, data))
        assert np.abs(a - b).max() <= 1e-6


def test_local_hamiltonian_skips_singular_locus():
    # n = 1, |y| = 1 gives c_1 = 1/2 = 1 - t at t = 1/2
    res = identity_suite(np.array([1.0 + 0j]), 0.5)
    assert res.skipped == 1


def test_tolerance_table_covers_every_key():
    res = identity_suite(np.array([0.2 + 0.3j, 0.1j]), 0.3)
    assert set(res.residuals) <= set(IDENTITY_TOLERANCES)


# Schouten


@pytest.mark.parametrize("field", [tz.pi0_field, tz.pi_lambda_field, tz.pi_t_field])
def test_schouten_vanishes(field):
    r = rng(2)
    for _ in range(5):
        y = random_chart_point(r, 2)
        assert schouten(field, y, 0.6) <= 1e-8


def _r4(x):
    # {x1,x2} = x3, {x3,x4} = x1, not Poisson
    P = np.zeros((4, 4), dtype=object)
    P[0, 1], P[1, 0] = x[2], -x[2]
    P[2, 3], P[3, 2] = x[0], -x[0]
    return P


def test_r4_negative_control():
    field = field_with_derivative(_r4)
    x = np.array([0.8, -1.1, 0.4, 2.0])
    P, dP = field(x)
    # with {f,g} = df^T P dg:  {x1,{x2,x4}} + {x2,{x4,x1}} + {x4,{x1,x2}} = {x4, x3} = -x1
    assert jacobiator(P, dP, 0, 1, 3) == pytest.approx(-x[0])
    assert schouten(field, x) > 0.5


def test_constant_bivector_is_poisson():
    field = field_with_derivative(lambda x: np.array([[0, 1.0], [-1.0, 0]], dtype=object) * 1)
    assert schouten(field, np.array([0.3, 0.2])) == 0.0

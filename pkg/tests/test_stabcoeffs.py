import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stabocp.chebkernel import cheb_table
from stabocp.errors import InvalidInputError
from stabocp.stabcoeffs import (
    cheb1_coeffs,
    classical_rkc_coeffs,
    coefficients,
    rkc2_coeffs,
    select_stages,
    stage_abscissae,
    unroll_tableau,
)

etas = st.sampled_from([0.0, 0.05, 0.15, 0.3])


def test_cheb1_examples():
    assert cheb1_coeffs(1, 0.0).mu_at(1) == 1.0
    c = cheb1_coeffs(2, 0.0)
    assert (c.mu_at(1), c.mu_at(2), c.nu_at(2)) == pytest.approx((0.25, 0.5, 2.0))
    assert np.allclose(c.alpha, [2.0, 1.0])


@pytest.mark.parametrize("s", range(1, 31))
def test_undamped_chebyshev_alpha(s):
    c = cheb1_coeffs(s, 0.0)
    for j in range(s):
        assert c.alpha_at(s - j) == pytest.approx(j + 1.0, rel=1e-12)
    assert c.mu_at(1) == pytest.approx(1.0 / s**2)


def test_rkc2_examples():
    c = rkc2_coeffs(2, 0.0)
    assert c.omega == pytest.approx(1.0)
    assert (c.mu_at(1), c.mu_at(2), c.nu_at(2)) == pytest.approx((1.0, 2.0, 2.0))
    assert c.b_final_T == pytest.approx(0.25) and c.a_final == pytest.approx(0.75)
    for s in range(2, 20):
        c = rkc2_coeffs(s, 0.0)
        assert c.omega == pytest.approx(3.0 / (s * s - 1))
        assert c.mu_at(1) == pytest.approx(3.0 / (s * s - 1))


def test_rkc2_final_weights():
    c = rkc2_coeffs(10, 0.15)
    t, dt, ddt = cheb_table(10, c.omega0)
    b_s = ddt[10] / dt[10] ** 2
    assert c.a_final + c.b_final_T == pytest.approx(1.0, abs=1e-15)
    assert abs(c.a_final + b_s) == pytest.approx(1.0 - 0.15 / 3.0, abs=0.01)


@given(st.integers(1, 60), etas)
def test_internal_consistency(s, eta):
    c = cheb1_coeffs(s, eta)
    mu, nu, _ = c.padded()
    for i in range(2, s + 1):
        assert nu[i] + (1.0 - nu[i]) == pytest.approx(1.0)
    # stage abscissae are the unrolled row sums
    t = unroll_tableau(c)
    assert np.allclose(stage_abscissae(c)[:s], t.c, atol=1e-12)
    assert t.b.sum() == pytest.approx(1.0, rel=1e-12)


@given(st.integers(2, 50))
def test_alpha_positive_undamped(s):
    assert np.all(cheb1_coeffs(s, 0.0).alpha > 0)
    assert np.all(rkc2_coeffs(s, 0.0).alpha > 0)


def test_order_two_abscissae():
    for s in (2, 5, 11):
        c = rkc2_coeffs(s)
        ab = stage_abscissae(c)
        # last stage sits where a_s + b_s T_s y_{k_s} evaluates at t_k + h
        assert c.b_final_T * ab[s] == pytest.approx(1.0, rel=1e-12)


def test_classical_rkc():
    cc = classical_rkc_coeffs(2, 0.15)
    w0 = 1.0 + 0.15 / 4
    t, dt, ddt = cheb_table(2, w0)
    assert cc.b[2] == pytest.approx(ddt[2] / dt[2] ** 2)
    assert cc.b[0] == cc.b[1] == cc.b[2]
    assert cc.omega0 == pytest.approx(w0)


def test_invalid_stage_counts():
    with pytest.raises(InvalidInputError):
        cheb1_coeffs(0)
    with pytest.raises(InvalidInputError):
        rkc2_coeffs(1)
    with pytest.raises(InvalidInputError):
        classical_rkc_coeffs(1)
    with pytest.raises(InvalidInputError):
        cheb1_coeffs(3, -0.1)
    with pytest.raises(InvalidInputError):
        coefficients(3, 4)


def test_select_stages_examples():
    assert select_stages(1.0, 1000.0, 2) == 40
    assert select_stages(1.0 / 16, 1000.0, 2) == 10
    assert select_stages(1.0, 0.0, 2) == 2
    assert select_stages(1.0, 0.0, 1) == 1
    assert [select_stages(2.0**-i, 1000.0, 2) for i in range(5)] == [40, 28, 20, 14, 10]
    with pytest.raises(InvalidInputError):
        select_stages(-1.0, 1.0, 2)
    with pytest.raises(InvalidInputError):
        select_stages(1.0, -1.0, 1)


@given(st.floats(1e-3, 1e5), st.sampled_from([1, 2]))
def test_selected_stages_cover_the_spectrum(hl, order):
    s = select_stages(1.0, hl, order)
    c = coefficients(order, s)
    beta = (1.0 + c.omega0) / c.omega
    assert beta >= hl


def test_coefficients_are_cached_and_frozen():
    assert rkc2_coeffs(7) is rkc2_coeffs(7)
    with pytest.raises(ValueError):
        rkc2_coeffs(7).mu[0] = 1.0

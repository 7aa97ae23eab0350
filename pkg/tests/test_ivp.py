import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabocp.chebkernel import cheb_values
from stabocp.errors import InvalidInputError, StepOverflowError
from stabocp.ivp import cheb1_step, classical_rkc_step, integrate, rkc2_step
from stabocp.solver import fit_slope
from stabocp.stabcoeffs import cheb1_coeffs, classical_rkc_coeffs, rkc2_coeffs, unroll_tableau
from stabocp.tableau import apply_generic_rk


def lin(lam):
    return lambda y: lam * y


def test_single_stage_is_euler():
    y = np.array([1.0, -2.0])
    out = cheb1_step(lambda v: v**2, y, 0.1, cheb1_coeffs(1))
    assert np.allclose(out.next_state, y + 0.1 * y**2)
    assert out.evals == 1


def test_chebyshev_at_interval_end():
    out = cheb1_step(lin(-200.0), np.array([1.0]), 1.0, cheb1_coeffs(10, 0.0))
    assert out.next_state[0] == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_chebyshev_matches_unrolled(s, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4))
    y = rng.normal(size=4)
    c = cheb1_coeffs(s)
    ref = apply_generic_rk(unroll_tableau(c), lambda v: M @ v, y, 0.2)
    assert np.allclose(cheb1_step(lambda v: M @ v, y, 0.2, c).next_state, ref, atol=1e-12)


def test_rkc_s2_is_taylor():
    c = rkc2_coeffs(2, 0.0)
    for z in (-1.7, -0.3, 0.4):
        out = rkc2_step(lin(z), np.array([1.0]), 1.0, c)
        assert out.next_state[0] == pytest.approx(1 + z + z * z / 2, abs=1e-14)


@pytest.mark.parametrize("s", [2, 5, 12, 20])
def test_rkc_stability_ratio_closed_form(s):
    c = rkc2_coeffs(s)
    z = np.linspace(-(1 + c.omega0) / c.omega, 0.0, 50)
    closed = c.a_final + c.b_final_T * cheb_values(s, c.omega0 + c.omega * z)[s] / cheb_values(s, c.omega0)[s]
    got = np.array([rkc2_step(lin(zk), np.array([1.0]), 1.0, c).next_state[0] for zk in z])
    assert np.allclose(got, closed, atol=1e-10)


def test_rkc_local_error_ratio():
    c = rkc2_coeffs(4)
    F = np.cos
    y0 = np.array([0.3])

    def local_err(h):
        one = rkc2_step(F, y0, h, c).next_state
        half = rkc2_step(F, rkc2_step(F, y0, h / 2, c).next_state, h / 2, c).next_state
        return abs(one - half)[0]

    assert local_err(0.1) / local_err(0.05) == pytest.approx(8.0, rel=0.1)


def test_classical_rkc_same_final_different_stages():
    s = 10
    cc = classical_rkc_coeffs(s, 0.15)
    c = rkc2_coeffs(s, 0.15)
    for z in (-40.0, -11.0, -0.5):
        a = classical_rkc_step(lin(z), np.array([1.0]), 1.0, cc, keep_stages=True)
        b = rkc2_step(lin(z), np.array([1.0]), 1.0, c, keep_stages=True)
        assert a.next_state[0] == pytest.approx(b.next_state[0], abs=1e-10)
        T = cheb_values(s, cc.omega0 + cc.omega2 * z)
        assert np.allclose([v[0] for v in a.internal_stages], cc.a + cc.b * T, atol=1e-10)
        assert not np.allclose([v[0] for v in a.internal_stages], [v[0] for v in b.internal_stages])
    out = classical_rkc_step(lin(0.0), np.array([2.5]), 0.3, cc)
    assert out.next_state[0] == pytest.approx(2.5, abs=1e-14)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_overflow_reports_stage():
    with pytest.raises(StepOverflowError) as info:
        cheb1_step(lambda y: y * 1e300, np.array([1e10]), 1.0, cheb1_coeffs(4))
    assert info.value.stage == 1
    with pytest.raises(StepOverflowError) as info:
        integrate(lin(-1e6), np.array([1.0]), 1.0, 40, method="rkc2", s=3)
    assert info.value.step is not None


def test_integrate_zero_field_and_validation():
    tr = integrate(lambda y: np.zeros_like(y), np.array([1.0, 2.0]), 1.0, 5, s=3)
    assert np.all(tr.states == np.array([1.0, 2.0]))
    assert tr.evals == 15 and tr.stages == [3] * 5
    with pytest.raises(InvalidInputError):
        integrate(np.cos, np.array([0.0]), 1.0, 0, s=3)
    with pytest.raises(InvalidInputError):
        integrate(np.cos, np.array([0.0]), 1.0, 4)
    with pytest.raises(InvalidInputError):
        integrate(np.cos, np.array([0.0]), 1.0, 4, s=3, method="rk4")


def test_very_stiff_adaptive_run_stays_bounded():
    lam = -1e6
    tr = integrate(lin(lam), np.array([1.0]), 1e-2, 1, method="rkc2", lambda_max=lambda y: 1e6)
    assert tr.stages[0] >= 100
    assert abs(tr.states[-1, 0]) <= 1.0


def _heat(n=20):
    dx = 1.0 / (n + 1)
    L = (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / dx**2
    x = np.linspace(dx, 1 - dx, n)
    return (lambda y: L @ y), np.sin(np.pi * x), 4.0 / dx**2


@pytest.mark.parametrize("method,order", [("cheb1", 1), ("rkc2", 2)])
def test_heat_self_convergence(method, order):
    F, y0, lam = _heat()
    T = 0.05
    ref = integrate(F, y0, T, 512, method=method, lambda_max=lambda y: lam).states[-1]
    hs, errs = [], []
    for N in (8, 16, 32, 64):
        tr = integrate(F, y0, T, N, method=method, lambda_max=lambda y: lam)
        hs.append(T / N)
        errs.append(np.max(np.abs(tr.states[-1] - ref)))
    assert fit_slope(hs, errs) == pytest.approx(order, abs=0.2)

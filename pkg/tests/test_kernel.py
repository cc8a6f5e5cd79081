import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoupled import kernel, model

angle = st.floats(0.0, 2 * np.pi)
radius = st.floats(0.1, 1.0)


def point(r, a):
    return r * np.exp(1j * a)


def test_phase_probabilities_table1(table1):
    # frozen: gamma/tau ratios 0.1 each give (5/6, 1/12, 1/12)
    p = kernel.phase_probabilities_raw(table1)
    np.testing.assert_allclose(p, [5 / 6, 1 / 12, 1 / 12], atol=1e-12)
    assert abs(p.sum() - 1) < 1e-12


def test_outside_bidisc_rejected(table1):
    with pytest.raises(ValueError):
        kernel.eval_rkc(table1, 1.2, 0.5)


def test_psa_kernels_pole_at_zero(table1):
    with pytest.raises(ValueError):
        kernel.eval_psa_kernels(table1, 0.0, 0.5)


def test_no_modulation_gives_t_equal_one():
    p = model.NetworkParams(((1.0, 0.8),), (5.0, 6.0), (), (), 0.3, 0.2, 0.5)
    spec = model.build_network_model(p)
    g, g10, g00 = kernel.psa_kernels_raw(spec, 0.4 + 0.2j, 0.3)
    gs = kernel.psa_kernels_scaled_raw(spec, 0.4 + 0.2j, 0.3)
    np.testing.assert_allclose([g, g10, g00], gs)


def test_contour_derivative_of_polynomial():
    d = kernel.contour_derivative(lambda z: z**3 + 2 * z, 1.0, 1)
    assert abs(d - 5.0) < 1e-9
    d2 = kernel.contour_derivative(lambda z: z**3 + 2 * z, 1.0, 2)
    assert abs(d2 - 6.0) < 1e-8


@given(radius, angle, radius, angle)
def test_two_forms_of_c_agree(table1, r1, a1, r2, a2):
    x, y = point(r1, a1), point(r2, a2)
    R, K, C1, C2 = kernel.rkc_raw(table1, x, y)
    assert abs(C1 - C2) <= 1e-12 * max(1.0, abs(C1))


@given(radius, angle, radius, angle)
def test_phase_solve_satisfies_linear_system(table1, r1, a1, r2, a2):
    x, y = point(r1, a1), point(r2, a2)
    res = kernel.eval_phase_solve(table1, x, y)
    N = table1.n_phases
    th = table1.theta
    for k in range(1, N + 1):
        lhs = kernel.d_k_raw(table1, k, x, y) * res.F[k - 1]
        rhs = th[0, k] * kernel.a_jk_raw(table1, 0, k, x, y)
        rhs += sum(th[m, k] * kernel.a_jk_raw(table1, m, k, x, y) * res.F[m - 1] for m in range(1, N + 1) if m != k)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


@given(radius, angle, radius, angle)
def test_psa_kernel_decomposition(table1, r1, a1, r2, a2):
    # scaled kernels are the w = 0 forms of (R - xy/T, K, C) divided by x
    x, y = point(r1, a1), point(r2, a2)
    g, g10, g00 = kernel.psa_kernels_scaled_raw(table1, x, y)
    s0 = table1.with_w(0.0)
    R, K, C, _ = kernel.rkc_raw(s0, x, y)
    tinv = kernel.t_inv_raw(table1, x, y)
    assert abs(g - (R - x * y * tinv) / x) < 1e-10 * max(1.0, abs(g))
    assert abs(g10 - K / x) < 1e-10 * max(1.0, abs(g10))
    assert abs(g00 - C / x) < 1e-10 * max(1.0, abs(g00))

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoupled import model, stability

# frozen from the truncated CTMC at L = 80 (boundary mass < 1e-15)
TABLE1_PI00 = 0.43717494090


def scaled(c):
    base = model.table1_params()
    return base.replace(lam=tuple((a * c, b * c) for a, b in base.lam))


def test_pi0_origin_table1(table1):
    assert abs(stability.pi0_origin(table1) - TABLE1_PI00) < 1e-8


def test_overloaded_model_raises():
    spec = model.build_network_model(scaled(3.0))
    with pytest.raises(stability.UnstableError):
        stability.pi0_origin(spec)
    summ = stability.stability_summary(spec)
    assert not summ.stable and summ.pi0_origin < 0


def test_stability_summary_table1(table1):
    summ = stability.stability_summary(table1)
    assert summ.stable
    np.testing.assert_allclose(summ.phase_probs, [5 / 6, 1 / 12, 1 / 12])
    assert 0 < summ.rho < 1


def test_network_stability_table1():
    left, p0, ok = stability.network_stability(model.table1_params())
    assert ok
    assert abs(p0 - 5 / 6) < 1e-12
    assert abs(left - 0.39616) < 1e-5


def test_s_curve_matches_quadratic_roots(table1):
    curve = stability.solve_s_curve(table1, 64)
    for y, s in curve.samples:
        assert np.min(np.abs(stability.qbd_s_roots(table1, y) - s)) < 1e-9
    assert abs(curve.s[0] - 1) < 1e-12


def test_s_curve_conjugate_symmetric(table1):
    curve = stability.solve_s_curve(table1, 64)
    s = curve.s
    np.testing.assert_allclose(s[1:], np.conj(s[1:][::-1]), atol=1e-12)


def test_kernel_zero_curve_certificates(table1):
    kz = stability.kernel_zero_curves(table1, 128)
    n = len(kz.g)
    assert np.max(kz.residual) < 1e-10
    assert abs(kz.g[0] - 1) < 1e-9
    assert np.max(np.abs(kz.g[n // 2:] + kz.g[: n // 2])) < 1e-9
    assert np.max(np.abs(kz.g[1:] - np.conj(kz.g[1:][::-1]))) < 1e-9


def test_kernel_zero_curves_need_even_sampling(table1):
    with pytest.raises(ValueError):
        stability.kernel_zero_curves(table1, 33)


def test_csv_writers(tmp_path, table1):
    kz = stability.kernel_zero_curves(table1, 16)
    kz.write_csv(tmp_path / "g.csv")
    stability.write_s_curve_csv(stability.solve_s_curve(table1, 16), tmp_path / "s.csv")
    assert len((tmp_path / "g.csv").read_text().splitlines()) == 17
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 17


@given(st.floats(0.3, 3.5))
def test_verdicts_agree_away_from_boundary(c):
    p = scaled(c)
    left, p0, ok = stability.network_stability(p)
    if abs(left / p0 - 1) < 0.03:
        return
    spec = model.build_network_model(p)
    assert stability.stability_summary(spec).stable == ok


@given(st.floats(0.3, 1.8))
def test_pi0_origin_decreases_with_load(c):
    a = stability.pi0_origin(model.build_network_model(scaled(c)))
    b = stability.pi0_origin(model.build_network_model(scaled(c * 1.1)))
    assert b < a

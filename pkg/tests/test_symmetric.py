import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoupled import model, stability, symmetric

# frozen from the truncated CTMC (tol 1e-6)
SYM_VARIANT_CTMC = (0.19272561055246146, 0.6323604710701467)  # E(X1), Pi0(0,0)
TABLE2_CTMC = (0.1952882178552148, 0.2012824754896447, 0.6290322580645168)  # E(X1), E(X2), Pi0(0,0)


def fully_symmetric(lam=0.5, gamma=0.5):
    p = model.table2_params(lam, gamma).replace(lam=((lam, lam), (0.5, 0.5), (0.1, 0.1)))
    return model.build_network_model(p)


def test_exact_under_symmetric_phases():
    sm = symmetric.symmetric_moments(fully_symmetric())
    assert abs(sm.M1 - SYM_VARIANT_CTMC[0]) < 1e-10
    assert sm.M1 == sm.M2
    assert abs(sm.pi0_origin - SYM_VARIANT_CTMC[1]) < 1e-10


def test_diagonal_expansion_cross_check(table2):
    sm = symmetric.symmetric_moments(table2)
    assert abs(sm.M - sm.M_diagonal) < 1e-10


def test_sum_of_means_exact_on_table2(table2):
    sm = symmetric.symmetric_moments(table2)
    assert abs(sm.M1 + sm.M2 - TABLE2_CTMC[0] - TABLE2_CTMC[1]) < 1e-10
    assert abs(sm.pi0_origin - TABLE2_CTMC[2]) < 1e-10


def test_pi0_matches_general_limit(table2):
    assert abs(symmetric.symmetric_moments(table2).pi0_origin - stability.pi0_origin(table2)) < 1e-8


def test_printed_expressions_disagree():
    # the uncorrected M expression is kept only as a diagnostic
    sm = symmetric.symmetric_moments(fully_symmetric())
    assert abs(sm.M_printed - sm.M) > 0.1


def test_rejects_asymmetric(table1):
    with pytest.raises(ValueError):
        symmetric.symmetric_moments(table1)


def test_rejects_unstable():
    with pytest.raises(stability.UnstableError):
        symmetric.symmetric_moments(model.build_network_model(model.table2_params(3.0, 0.5)))


@given(st.floats(0.1, 1.2), st.floats(0.2, 2.0))
def test_rho_agrees_with_general_verdict(lam, gamma):
    spec = model.build_network_model(model.table2_params(lam, gamma))
    general = stability.stability_summary(spec)
    try:
        sm = symmetric.symmetric_moments(spec)
    except stability.UnstableError:
        assert not general.stable
        return
    assert general.stable
    assert 0 < sm.rho < 1
    assert abs(sm.pi0_origin - general.pi0_origin) < 1e-7


@given(st.floats(0.1, 1.2), st.floats(0.2, 2.0))
def test_symmetric_phases_give_equal_means(lam, gamma):
    sm = symmetric.symmetric_moments(fully_symmetric(lam, gamma))
    assert abs(sm.M - sm.M_diagonal) < 1e-9 * max(1.0, abs(sm.M))
    assert sm.M1 == sm.M2 > 0

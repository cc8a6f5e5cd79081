import gzip

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoupled import model, oracle, retrial


def mm1(lam, nu):
    # queue 1 alone: no second-queue arrivals, no routing, no modulation
    p = model.NetworkParams(((lam, 0.0),), (nu, 1.0), (), (), 0.0, 0.0, 0.5)
    return model.build_network_model(p)


def test_mm1_reduction():
    r = oracle.stationary(mm1(1.0, 2.0), 80, 4)
    rho = 0.5
    assert abs(r.mean_x1 - rho / (1 - rho)) < 1e-10
    np.testing.assert_allclose(r.pi[:5, 0, 0], (1 - rho) * rho ** np.arange(5), atol=1e-12)


def test_vector_is_normalised(table1):
    r = oracle.stationary(table1, 30, 30)
    assert abs(r.pi.sum() - 1) < 1e-12
    assert r.residual < 1e-9


def test_generator_rows_sum_to_zero(table1):
    ctmc = oracle.build_truncated_ctmc(table1, 10, 12)
    assert np.max(np.abs(np.asarray(ctmc.generator.sum(axis=1)))) < 1e-12


def test_index_round_trip(table1):
    ctmc = oracle.build_truncated_ctmc(table1, 7, 9)
    i = np.arange(ctmc.generator.shape[0])
    assert np.array_equal(ctmc.index(*ctmc.unindex(i)), i)


def test_state_budget(table1):
    with pytest.raises(oracle.OracleError):
        oracle.build_truncated_ctmc(table1, 100, 100, max_states=1000)


def test_power_iteration_agrees_with_direct(table1):
    ctmc = oracle.build_truncated_ctmc(table1, 20, 20)
    a = oracle.solve_stationary(ctmc, "direct")
    b = oracle.solve_stationary(ctmc, "power")
    assert np.max(np.abs(a.pi - b.pi)) < 1e-9


def test_refinement_converges(table1):
    ref = oracle.refine_truncation(table1, "mean_x1", 1e-6)
    assert ref.boundary_mass < 1e-8
    assert len(ref.history) >= 2


def test_refinement_refuses_unstable():
    with pytest.raises(oracle.OracleError):
        oracle.refine_truncation(mm1(3.0, 2.0), stability_check=lambda m: False)


def test_export_csv_gz(tmp_path, table1):
    r = oracle.stationary(table1, 10, 10)
    path = tmp_path / "pi.csv.gz"
    r.export_csv(path)
    with gzip.open(path, "rt") as fh:
        rows = fh.read().splitlines()
    assert rows[0] == "x1,x2,phase,prob"
    total = sum(float(line.split(",")[3]) for line in rows[1:])
    assert abs(total - 1) < 1e-12


def test_retrial_phase_structure():
    p = retrial.RetrialParams(0.2, 0.2, 0.2, 1.0, 1.0, 1.0, 2)
    r = oracle.stationary(p, 30, 30)
    assert r.pi.shape == (31, 31, 3)


def test_simulation_is_reproducible(table1):
    a = oracle.simulate(table1, 500.0, seed=7, level_cap=30)
    b = oracle.simulate(table1, 500.0, seed=7, level_cap=30)
    assert a.mean_x1 == b.mean_x1 and a.events == b.events
    c = oracle.simulate(table1, 500.0, seed=8, level_cap=30)
    assert c.mean_x1 != a.mean_x1


def test_simulation_arguments(table1):
    with pytest.raises(ValueError):
        oracle.simulate(table1, 100.0, seed=0, n_batches=5, level_cap=20)


def test_simulation_phase_occupancy(table1):
    est = oracle.simulate(table1, 20000.0, seed=1, level_cap=30)
    np.testing.assert_allclose(est.phase_occupancy, [5 / 6, 1 / 12, 1 / 12], atol=0.02)


@given(st.floats(0.1, 0.8))
def test_mm1_pgf_identity(rho):
    r = oracle.stationary(mm1(rho, 1.0), 60, 3)
    x = 0.5
    expect = (1 - rho) / (1 - rho * x)
    assert abs(r.pgf(0, x, 1.0) - expect) < 1e-6

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoupled import model

rate = st.floats(0.0, 5.0)


def network(lam1, lam2, nu1, nu2, w):
    return model.NetworkParams(((lam1, lam2), (0.5, 0.6)), (nu1, nu2), (0.5,), (5.0,), 0.3, 0.2, w)


def test_table1_model_is_valid(table1):
    assert model.validate_model(table1) == []
    assert table1.n_phases == 2
    assert table1.is_qbd()


def test_coupling_identity_violation_is_reported(table1):
    inner = dict(table1.interior)
    inner[(-1, 0)] *= 1.5
    bad = model.ModelSpec(
        table1.n_phases, table1.w, inner, table1.interior_phase,
        table1.boundary_x, table1.boundary_y, table1.corner, table1.switch,
    )
    rules = {v.rule for v in model.validate_model(bad)}
    assert "coupl" in rules


def test_negative_phase_increment_violates_ass2(table1):
    phases = ({**table1.interior_phase[0], (-1, 0): 1.0},) + table1.interior_phase[1:]
    bad = model.ModelSpec(
        table1.n_phases, table1.w, table1.interior, phases,
        table1.boundary_x, table1.boundary_y, table1.corner, table1.switch,
    )
    assert "ass2" in {v.rule for v in model.validate_model(bad)}


def test_diagonal_down_step_violates_as1(table1):
    inner = {**table1.interior, (-1, -1): 0.1}
    bad = model.ModelSpec(
        table1.n_phases, table1.w, inner, table1.interior_phase,
        table1.boundary_x, table1.boundary_y, table1.corner, table1.switch,
    )
    assert "as1" in {v.rule for v in model.validate_model(bad)}


def test_jump_distribution_must_sum_to_one(table1):
    sw = model.PhaseSwitch(table1.theta, {(0, 1): {(0, 0): 0.5, (1, 0): 0.4}})
    bad = model.ModelSpec(
        table1.n_phases, table1.w, table1.interior, table1.interior_phase,
        table1.boundary_x, table1.boundary_y, table1.corner, sw,
    )
    assert "as3" in {v.rule for v in model.validate_model(bad)}


def test_table2_is_symmetric_and_table1_is_not(table1, table2):
    assert model.is_symmetric(table2)
    assert not model.is_symmetric(table1)
    assert not model.is_symmetric(table2.with_w(0.4))


def test_network_check_rejects_bad_routing():
    with pytest.raises(ValueError):
        model.build_network_model(model.table1_params().replace(r12=1.0))


def test_json_round_trip(tmp_path, table1):
    path = tmp_path / "m.json"
    model.save_model(table1, path)
    again = model.load_model(path)
    assert model.spec_to_dict(again) == model.spec_to_dict(table1)


def test_network_shorthand_loads(tmp_path):
    path = tmp_path / "n.json"
    path.write_text(json.dumps(model.network_to_dict(model.table1_params())))
    spec = model.load_model(path)
    assert model.validate_model(spec) == []


def test_swapped_is_an_involution(table1):
    back = table1.swapped().swapped()
    assert model.spec_to_dict(back) == model.spec_to_dict(table1)


@given(rate, rate, st.floats(0.5, 5.0), st.floats(0.5, 5.0), st.floats(0.0, 1.0))
def test_networks_always_validate(l1, l2, nu1, nu2, w):
    spec = model.build_network_model(network(l1, l2, nu1, nu2, w))
    assert model.validate_model(spec) == []


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_with_w_preserves_validity_and_boundary(w1, w2):
    spec = model.build_network_model(network(1.0, 0.8, 5.0, 6.0, w1)).with_w(w2)
    assert model.validate_model(spec) == []
    assert spec.w == w2
    np.testing.assert_allclose(spec.interior[(-1, 0)], w2 * spec.boundary_x[(-1, 0)])

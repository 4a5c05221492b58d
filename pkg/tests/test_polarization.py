import math

import numpy as np
import pytest

from weakvalue.errors import DivergentWeakValueError, InvalidArgumentError
from weakvalue.polarization import (
    PI_H,
    PI_V,
    Axis,
    PolarizationState,
    Projector,
    branch_amplitudes,
    inner_product,
    linear_weak_values,
    make_linear_state,
    solve_postselection_angle,
    weak_value,
)
from tests import common


def test_make_linear_state_is_normalized():
    for theta in np.linspace(-3.0, 3.0, 13):
        state = make_linear_state(float(theta))
        assert abs(state.amp_h) ** 2 + abs(state.amp_v) ** 2 == pytest.approx(1.0, abs=1e-15)
        assert state.is_linear


@pytest.mark.parametrize("theta", [math.nan, math.inf, -math.inf])
def test_make_linear_state_rejects_non_finite(theta):
    with pytest.raises(InvalidArgumentError):
        make_linear_state(theta)


def test_state_must_be_normalized():
    with pytest.raises(InvalidArgumentError):
        PolarizationState(1.0, 1.0)


def test_from_amplitudes_normalizes():
    state = PolarizationState.from_amplitudes(3.0, 4.0j)
    assert state.amp_h == pytest.approx(0.6)
    assert state.amp_v == pytest.approx(0.8j)
    assert not state.is_linear


def test_from_amplitudes_rejects_zero_vector():
    with pytest.raises(InvalidArgumentError):
        PolarizationState.from_amplitudes(0.0, 0.0)


def test_projectors():
    state = make_linear_state(0.3)
    assert np.allclose(PI_H.apply(state), [math.cos(0.3), 0.0])
    assert np.allclose(PI_V.apply(state.vector), [0.0, math.sin(0.3)])
    assert np.allclose(PI_H.matrix @ PI_H.matrix, PI_H.matrix)
    assert np.allclose(PI_H.matrix + PI_V.matrix, np.eye(2))
    assert PI_H.complement == PI_V
    assert Projector("V") == PI_V
    assert Projector(Axis.H) != PI_V
    assert len({PI_H, Projector(Axis.H), PI_V}) == 2


def test_anomalous_weak_values():
    psi_i = make_linear_state(common.THETA_I)
    psi_f = make_linear_state(common.ANOMALOUS_THETA_F)
    result = weak_value(PI_H, psi_i, psi_f)
    assert result.is_real
    assert result.real == pytest.approx(2.5, abs=1e-12)
    assert weak_value(PI_V, psi_i, psi_f).real == pytest.approx(-1.5, abs=1e-12)
    assert result.overlap_z == pytest.approx(inner_product(psi_f, psi_i))


def test_weak_values_sum_to_one_for_complex_states():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        psi_i = PolarizationState.from_amplitudes(*(rng.normal(size=2) + 1j * rng.normal(size=2)))
        psi_f = PolarizationState.from_amplitudes(*(rng.normal(size=2) + 1j * rng.normal(size=2)))
        total = weak_value(PI_H, psi_i, psi_f).value + weak_value(PI_V, psi_i, psi_f).value
        assert abs(total - 1.0) < 1e-9


def test_circular_preselection_gives_complex_weak_value():
    psi_i = PolarizationState.from_amplitudes(1.0, 1.0j)
    result = weak_value(PI_H, psi_i, make_linear_state(0.4))
    assert not result.is_real


def test_orthogonal_selection_diverges():
    psi_i = make_linear_state(common.THETA_I)
    psi_f = make_linear_state(common.ORTHOGONAL_THETA_F)
    with pytest.raises(DivergentWeakValueError) as err:
        weak_value(PI_H, psi_i, psi_f)
    assert err.value.overlap < 1e-10
    assert "DivergentWeakValueError" in str(err.value)


def test_branch_amplitudes_sum_to_overlap():
    psi_i = PolarizationState.from_amplitudes(0.3 + 0.2j, -0.7)
    psi_f = PolarizationState.from_amplitudes(1.0, 0.5 - 0.5j)
    z_h, z_v = branch_amplitudes(psi_i, psi_f)
    assert z_h + z_v == pytest.approx(inner_product(psi_f, psi_i))


@pytest.mark.parametrize("theta_i", [common.THETA_I, 0.3, -1.1])
@pytest.mark.parametrize("target", [-3.0, -1.5, 0.0, 0.5, 1.0, 2.5, 4.0])
def test_solve_postselection_angle(theta_i, target):
    theta_f = solve_postselection_angle(target, theta_i)
    assert -math.pi / 2 < theta_f <= math.pi / 2
    aw_h, aw_v = linear_weak_values(theta_i, theta_f)
    assert aw_h == pytest.approx(target, abs=1e-9)
    assert aw_h + aw_v == pytest.approx(1.0, abs=1e-9)


def test_solver_for_anomalous_target():
    assert solve_postselection_angle(2.5, common.THETA_I) == pytest.approx(common.ANOMALOUS_THETA_F, abs=1e-12)


@pytest.mark.parametrize("theta_i", [0.0, math.pi / 2])
def test_solver_rejects_eigenstate_preselection(theta_i):
    with pytest.raises(InvalidArgumentError):
        solve_postselection_angle(2.0, theta_i)


def test_linear_weak_values_closed_form():
    for theta_f in (-0.5, 0.1, 0.9):
        aw_h, _ = linear_weak_values(0.6, theta_f)
        assert aw_h == pytest.approx(1.0 / (1.0 + math.tan(0.6) * math.tan(theta_f)), rel=1e-12)

import numpy as np
import numpy.testing as npt
import pytest

from eigtrack.bath import (BathSpec, DecayFunctions, bruteforce_liouville,
                           closed_form_c_tilde, exact_qubit_me,
                           open_qubit_kick, open_qubit_liouvillian,
                           populations, solve_c_plus, volterra_c_tilde)
from eigtrack.controls import (ChaoticTrain, ControlSignal, ImpulseNoise,
                               RectTrain)
from eigtrack.densemath import DEFAULT_POLICY, TimeGrid, cumtrapz
from eigtrack.errors import InstabilityError, TraceDriftError
from eigtrack.models import OpenQubitModel

PLUS = 0.5 * np.ones((2, 2), dtype=complex)


def test_bath_spec():
    bath = BathSpec(coupling=2.0, memory_rate=0.5)
    assert bath.strength == 0.5
    assert bath.kernel(0.0) == 0.5
    assert bath.kernel(-2.0) == pytest.approx(0.5 * np.exp(-1.0))
    with pytest.raises(ValueError):
        BathSpec(coupling=0.0, memory_rate=1.0)
    with pytest.raises(ValueError):
        BathSpec(coupling=1.0, memory_rate=-1.0)


def test_closed_form():
    bath = BathSpec(1.0, 0.5)
    control = ControlSignal(1.0)
    grid = TimeGrid.span(5.0, 500)
    decay = solve_c_plus(bath, control, grid)
    npt.assert_allclose(decay.c_tilde, closed_form_c_tilde(bath, 1.0, grid.times),
                        atol=1e-8)
    npt.assert_allclose(decay.c_plus,
                        decay.c_tilde * np.exp(1j * grid.times), atol=1e-12)
    assert decay.truncated_at is None
    assert decay.kappa[0] == 0.0


def test_decay_integrals():
    bath = BathSpec(1.0, 0.5)
    grid = TimeGrid.span(4.0, 4000)
    decay = solve_c_plus(bath, ControlSignal(1.0), grid)
    npt.assert_allclose(decay.kappa_integral, cumtrapz(decay.kappa, grid.dt),
                        atol=1e-6)
    npt.assert_allclose(decay.shift_integral, cumtrapz(decay.shift, grid.dt),
                        atol=1e-6)
    assert decay.kappa_at()(2.0) == pytest.approx(decay.kappa[2000])


def test_markovian_limit():
    grid = TimeGrid.span(1.0, 1000)
    decay = solve_c_plus(BathSpec(1.0, 400.0), ControlSignal(1.0), grid)
    assert decay.kappa[-1] == pytest.approx(1.0, abs=1e-2)


def test_markovian_functions():
    control = ControlSignal(1.0)
    grid = TimeGrid.span(2.0, 100)
    decay = DecayFunctions.markovian(grid, control, 0.4, 0.1)
    npt.assert_allclose(decay.kappa, 0.4)
    npt.assert_allclose(decay.shift, 0.1)
    npt.assert_allclose(decay.kappa_integral, 0.4 * grid.times, atol=1e-12)
    npt.assert_allclose(decay.shift_integral, 0.1 * grid.times, atol=1e-12)
    quiet = DecayFunctions.quiet(grid, control)
    npt.assert_allclose(quiet.kappa, 0.0)
    npt.assert_allclose(quiet.c_plus, np.exp(1j * grid.times))


def test_volterra_matches_local():
    bath = BathSpec(1.0, 0.5)
    control = ControlSignal(1.0)
    grid = TimeGrid.span(2.0, 8000)
    local = solve_c_plus(bath, control, grid)
    npt.assert_allclose(volterra_c_tilde(bath, control, grid), local.c_tilde,
                        atol=1e-6)


def test_volterra_with_pulses():
    bath = BathSpec(1.0, 0.5)
    control = ControlSignal(1.0, RectTrain(0.2, 0.1, 0.25))
    grid = TimeGrid.span(2.0, 8000)
    local = solve_c_plus(bath, control, grid)
    npt.assert_allclose(volterra_c_tilde(bath, control, grid), local.c_tilde,
                        atol=1e-4)


def test_impulses_rotate_memory():
    bath = BathSpec(1.0, 0.5)
    noise = ImpulseNoise(0.05, 0.5, k_min=1, k_max=2, mean_amplitude=0.5,
                         seed=4)
    control = ControlSignal(1.0, noise)
    grid = TimeGrid.span(2.0, 8000)
    kicked = solve_c_plus(bath, control, grid)
    quiet = solve_c_plus(bath, ControlSignal(1.0), grid)
    assert np.max(np.abs(kicked.c_tilde - quiet.c_tilde)) > 1e-3
    npt.assert_allclose(volterra_c_tilde(bath, control, grid), kicked.c_tilde,
                        atol=5e-3)
    npt.assert_allclose(kicked.phase, control.phase(grid.times))


def test_truncation():
    policy = DEFAULT_POLICY.with_changes(truncation_floor=0.5)
    grid = TimeGrid.span(5.0, 500)
    decay = solve_c_plus(BathSpec(5.0, 1.0), ControlSignal(1.0), grid, policy)
    assert decay.truncated_at is not None
    assert np.all(np.isnan(decay.c_tilde[decay.truncated_at:]))
    assert np.all(np.abs(decay.c_tilde[:decay.truncated_at]) >= 0.5)
    assert decay.diagnostics


def test_exact_me_populations():
    control = ControlSignal(1.0)
    model = OpenQubitModel(control, t_end=3.0)
    grid = TimeGrid.span(3.0, 600)
    decay = solve_c_plus(BathSpec(1.0, 0.5), control, grid)
    result = exact_qubit_me(model, decay, grid)
    npt.assert_allclose(result.fidelity_series,
                        np.exp(-0.5 * decay.kappa_integral), atol=1e-12)
    npt.assert_allclose(result.populations,
                        populations(model, grid, result.states), atol=1e-12)
    assert result.fidelity == pytest.approx(result.fidelity_series[-1])


@pytest.mark.parametrize('variant', [
    None,
    RectTrain(0.5, 0.02, 0.05),
    ChaoticTrain(0.5, 0.02, 0.05),
    ImpulseNoise(0.02, 0.05, mean_amplitude=0.05, seed=1),
])
@pytest.mark.parametrize('t_end', [1.0, 5.0, 20.0])
def test_exact_me_fidelity_decay(variant, t_end):
    control = ControlSignal(1.0, variant)
    model = OpenQubitModel(control, t_end=t_end)
    grid = TimeGrid.span(t_end, int(500 * t_end))
    decay = solve_c_plus(BathSpec(1.0, 0.5), control, grid)
    result = exact_qubit_me(model, decay, grid)
    npt.assert_allclose(result.fidelity_series,
                        np.exp(-0.5 * decay.kappa_integral), atol=1e-9)


def test_static_dual_solver():
    control = ControlSignal(2.0)
    model = OpenQubitModel(control, t_end=3.0, angle=0.0)
    grid = TimeGrid.span(3.0, 6000)
    decay = DecayFunctions.markovian(grid, control, 0.4, 0.1)
    closed = exact_qubit_me(model, decay, grid, rho0=PLUS)
    diabatic = exact_qubit_me(model, decay, grid, diabatic=True, rho0=PLUS)
    lab = bruteforce_liouville(open_qubit_liouvillian(model, decay), PLUS, grid)
    npt.assert_allclose(closed.states, lab.states, atol=1e-6)
    npt.assert_allclose(diabatic.states, lab.states, atol=1e-6)


def test_diabatic_with_pulses():
    control = ControlSignal(1.0, RectTrain(0.1, 0.05, 0.1))
    model = OpenQubitModel(control, t_end=1.0)
    grid = TimeGrid.span(1.0, 2000)
    decay = solve_c_plus(BathSpec(1.0, 0.5), control, grid)
    diabatic = exact_qubit_me(model, decay, grid, diabatic=True)
    lab = bruteforce_liouville(open_qubit_liouvillian(model, decay),
                               np.diag([0.0, 1.0]), grid, control,
                               open_qubit_kick(model))
    npt.assert_allclose(diabatic.states, lab.states, atol=1e-6)
    traces = np.trace(diabatic.states, axis1=1, axis2=2)
    npt.assert_allclose(traces, 1.0, atol=1e-9)


def test_bruteforce_failures():
    grid = TimeGrid.span(1.0, 100)
    with pytest.raises(InstabilityError):
        bruteforce_liouville(lambda t, j: 3.0 * np.eye(4), np.eye(2) / 2, grid)
    with pytest.raises(TraceDriftError):
        bruteforce_liouville(lambda t, j: -0.1 * np.eye(4), np.eye(2) / 2, grid)

"""Frame propagation, Riccati metric flow, centers, coefficients, ladder maps."""

import math

import numpy as np
import pytest

from hagedorn.errors import (
    DimensionMismatch,
    NonSymmetricH,
    PositivityLost,
)
from hagedorn.propagation import (
    HagedornExpansion,
    QuadraticHamiltonian,
    center_dynamics,
    evolve_metric_riccati,
    evolved_state_on_grid,
    flow,
    hagedorn_coefficients,
    positivity_horizon,
    propagate,
)
from hagedorn.swanson import L0, SwansonParams, ds_flow, ds_norm, ds_scalars
from hagedorn.symplectic import LagrangianFrame, NormalisedFrame, omega
from hagedorn.wavepackets import Grid, WavepacketParams, eval_excited, grid_inner

DS = SwansonParams(omega0=1.0, delta=0.5)
DS_HAM = QuadraticHamiltonian.constant(DS.matrix())
L0_FRAME = NormalisedFrame(LagrangianFrame(L0.reshape(2, 1)))
PERIOD = 2 * math.pi / DS.omega
T_STAR = math.pi / (2 * DS.omega)
ORIGIN = np.zeros(2)
GRID_1D = Grid(bounds=[(-12.0, 12.0)], counts=[1024])


def harmonic(n=1):
    return QuadraticHamiltonian.constant(np.eye(2 * n))


# -- Hamiltonian containers and flow maps -------------------------------------


def test_hamiltonian_kinds_evaluate():
    H = DS.matrix()
    assert np.array_equal(QuadraticHamiltonian.constant(H)(3.0), H)
    A, B = np.diag([1.0, 0.5]), np.array([[0.0, 0.2], [0.2, 0.0]])
    poly = QuadraticHamiltonian.polynomial([A, B])
    assert np.allclose(poly(0.7), A + 0.7 * B, atol=0)
    samp = QuadraticHamiltonian.sampled([0.0, 1.0], [A, B])
    assert np.allclose(samp(0.25), 0.75 * A + 0.25 * B, atol=1e-15)
    # clamped outside the sample window
    assert np.allclose(samp(2.0), B, atol=0)


def test_hamiltonian_rejects_bad_input():
    with pytest.raises(NonSymmetricH):
        QuadraticHamiltonian.constant(np.array([[1.0, 0.3], [0.2, 1.0]]))
    with pytest.raises(NonSymmetricH):
        QuadraticHamiltonian.sampled([0.0], [np.eye(2)])
    with pytest.raises(NonSymmetricH):
        QuadraticHamiltonian.sampled([0.0, 0.0], [np.eye(2), np.eye(2)])
    with pytest.raises(NonSymmetricH):
        QuadraticHamiltonian.constant(np.eye(3))


def test_flow_identity_at_equal_times():
    assert np.array_equal(flow(DS_HAM, 0.7, 0.7), np.eye(2))
    samp = QuadraticHamiltonian.sampled([0.0, 2.0], [DS.matrix(), DS.matrix()])
    assert np.array_equal(flow(samp, 0.5, 0.5), np.eye(2))
    with pytest.raises(DimensionMismatch):
        flow(DS_HAM, 1.0, 0.5)


def test_flow_matches_closed_form_both_routes():
    # constant kind uses the exponential, sampled kind integrates the ODE
    samp = QuadraticHamiltonian.sampled([0.0, 2.0], [DS.matrix(), DS.matrix()])
    for t in (0.3, 0.9, 1.3):
        S_exact = ds_flow(DS, t)
        assert np.max(np.abs(flow(DS_HAM, 0.0, t) - S_exact)) < 1e-12
        assert np.max(np.abs(flow(samp, 0.0, t) - S_exact)) < 1e-8


def test_flow_harmonic_is_real_rotation():
    t = 1.1
    S = flow(harmonic(), 0.0, t)
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    assert np.max(np.abs(S.imag)) < 1e-12
    assert np.max(np.abs(S.real - R)) < 1e-12


# -- propagation along the non-Hermitian oscillator ---------------------------


@pytest.fixture(scope="module")
def ds_trajectory():
    times = np.linspace(0.0, PERIOD, 50, endpoint=False)
    states = propagate(L0_FRAME, ORIGIN, DS_HAM, times, ode_tol=1e-10)
    return times, states


def test_propagate_validates_input():
    with pytest.raises(DimensionMismatch):
        propagate(L0_FRAME, ORIGIN, DS_HAM, [0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        propagate(L0_FRAME, ORIGIN, DS_HAM, [-0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        propagate(L0_FRAME, [0.0, 0.0, 0.0], DS_HAM, [0.0])
    with pytest.raises(DimensionMismatch):
        propagate(L0_FRAME, ORIGIN, harmonic(2), [0.0])


def test_propagate_tracked_invariants(ds_trajectory):
    times, states = ds_trajectory
    assert [s.t for s in states] == list(times)
    assert max(s.symplectic_defect for s in states) < 1e-9
    assert max(s.beta_defect for s in states) < 1e-8
    assert min(s.min_positivity for s in states) > 0.5


def test_propagate_matches_closed_form(ds_trajectory):
    # same start frame as the closed form, so gauges agree exactly
    times, states = ds_trajectory
    for t, s in zip(times, states):
        sc = ds_scalars(DS, t)
        assert np.max(np.abs(s.S - ds_flow(DS, t))) < 1e-8
        assert abs(s.N[0, 0] - sc.n) < 1e-8
        assert abs(s.beta - sc.beta) < 1e-8
        assert abs(s.M[0, 0] - sc.m) < 1e-8
        assert np.max(np.abs(s.Z.entries - sc.l.entries)) < 1e-8


def test_propagate_spot_values_at_quarter_period():
    state = propagate(L0_FRAME, ORIGIN, DS_HAM, np.array([T_STAR]))[-1]
    assert abs(math.exp(state.beta) - 0.6**0.25) < 1e-9
    assert abs(state.N[0, 0] - 0.6**-0.5) < 1e-9
    assert abs(state.M[0, 0] - 4.0 / 3.0) < 1e-9


def test_propagate_hermitian_degeneration():
    # real H: unitary dynamics, no norm gain, no lower-state activation
    times = np.linspace(0.0, 2 * math.pi, 40)
    z0 = np.array([0.3, -0.2])
    states = propagate(L0_FRAME, z0, harmonic(), times, ode_tol=1e-11)
    for t, s in zip(times, states):
        R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        assert abs(s.beta) < 1e-12
        assert np.max(np.abs(s.N - np.eye(1))) < 1e-9
        assert np.max(np.abs(s.M)) < 1e-9
        assert np.max(np.abs(s.z - R @ z0)) < 1e-8
        assert abs(s.action.imag) < 1e-10
    exp = hagedorn_coefficients(states[-1], [3])
    assert abs(exp.coefficients[(3,)] - 1.0) < 1e-9
    assert all(abs(c) < 1e-9 for k, c in exp.coefficients.items() if k != (3,))


def test_propagate_zero_center_stays_centered(ds_trajectory):
    _, states = ds_trajectory
    assert max(np.max(np.abs(s.z)) for s in states) == 0.0
    assert max(abs(s.action) for s in states) == 0.0


def test_propagate_raises_positivity_lost_with_partial_states():
    params = SwansonParams(omega0=0.5, delta=1.0)
    ham = QuadraticHamiltonian.constant(params.matrix())
    t_exact = math.acos(-0.25) / (2 * params.omega)
    with pytest.raises(PositivityLost) as info:
        propagate(L0_FRAME, ORIGIN, ham, np.linspace(0.0, 2.0, 41))
    assert abs(info.value.t_star - t_exact) < 1e-6
    states = info.value.states
    assert 0 < len(states) < 41
    assert states[-1].t < t_exact


def test_positivity_horizon_values():
    assert positivity_horizon(L0_FRAME, DS_HAM, 20.0) == math.inf
    assert positivity_horizon(L0_FRAME, harmonic(), 20.0) == math.inf
    params = SwansonParams(omega0=0.5, delta=1.0)
    ham = QuadraticHamiltonian.constant(params.matrix())
    t_exact = math.acos(-0.25) / (2 * params.omega)
    assert abs(positivity_horizon(L0_FRAME, ham, 2.0) - t_exact) < 1e-8


# -- metric flow (independent Riccati route) -----------------------------------


def test_riccati_matches_frame_route_over_a_period(ds_trajectory):
    times, states = ds_trajectory
    pairs = evolve_metric_riccati(np.eye(2), DS_HAM, times, ode_tol=1e-11)
    om = omega(1)
    for pair, state in zip(pairs, states):
        assert np.max(np.abs(pair.G - state.G)) < 1e-8
        assert np.max(np.abs(pair.J @ pair.J + np.eye(2))) < 1e-8
        assert np.max(np.abs(pair.G.T @ om @ pair.G - om)) < 1e-9


def test_riccati_harmonic_fixed_point():
    pairs = evolve_metric_riccati(np.eye(2), harmonic(), np.linspace(0.0, 5.0, 20))
    assert max(np.max(np.abs(p.G - np.eye(2))) for p in pairs) < 1e-10


def test_riccati_validates_input():
    with pytest.raises(DimensionMismatch):
        evolve_metric_riccati(np.eye(2), harmonic(2), [0.0, 1.0])
    with pytest.raises(DimensionMismatch):
        evolve_metric_riccati(np.eye(2), DS_HAM, [1.0, 0.5])


# -- center dynamics ------------------------------------------------------------


def test_center_callable_metric_matches_propagate():
    times = np.linspace(0.0, 2.0, 21)
    states = propagate(L0_FRAME, np.array([0.0, 1.0]), DS_HAM, times, ode_tol=1e-10)
    zs, actions = center_dynamics(
        [0.0, 1.0], DS_HAM, lambda t: ds_scalars(DS, t).metric, times, ode_tol=1e-10
    )
    for z, a, s in zip(zs, actions, states):
        assert np.max(np.abs(z - s.z)) < 1e-8
        assert abs(a - s.action) < 1e-8


def test_center_sampled_metric_matches_propagate():
    # the sampled route interpolates G linearly, so it needs a dense grid
    times = np.linspace(0.0, 2.0, 401)
    states = propagate(L0_FRAME, np.array([0.0, 1.0]), DS_HAM, times, ode_tol=1e-10)
    zs, actions = center_dynamics(
        [0.0, 1.0], DS_HAM, [s.G for s in states], times, ode_tol=1e-10
    )
    assert max(np.max(np.abs(z - s.z)) for z, s in zip(zs, states)) < 1e-4
    assert max(abs(a - s.action) for a, s in zip(actions, states)) < 1e-4


def test_center_validates_input():
    with pytest.raises(DimensionMismatch):
        center_dynamics([0.0, 1.0, 2.0], DS_HAM, lambda t: np.eye(2), [0.0, 1.0])
    with pytest.raises(DimensionMismatch):
        center_dynamics([0.0, 1.0], DS_HAM, [np.eye(2)], [0.0, 1.0])


# -- lower-state activation coefficients ----------------------------------------


@pytest.fixture(scope="module")
def ds_quarter_state():
    return propagate(L0_FRAME, ORIGIN, DS_HAM, np.array([T_STAR]), ode_tol=1e-10)[-1]


def test_coefficients_low_orders(ds_quarter_state):
    state = ds_quarter_state
    sc = ds_scalars(DS, T_STAR)
    exp0 = hagedorn_coefficients(state, [0])
    assert set(exp0.coefficients) == {(0,)}
    assert abs(exp0.coefficients[(0,)] - 1.0) < 1e-12
    exp1 = hagedorn_coefficients(state, [1])
    assert set(exp1.coefficients) == {(1,)}
    assert abs(exp1.coefficients[(1,)] - sc.n) < 1e-9
    exp2 = hagedorn_coefficients(state, [2])
    assert set(exp2.coefficients) == {(2,), (0,)}
    assert abs(exp2.coefficients[(2,)] - sc.n**2) < 1e-9
    assert abs(exp2.coefficients[(0,)] + sc.m / math.sqrt(2)) < 1e-9


def test_coefficients_support_and_parity(ds_quarter_state):
    for order in range(7):
        exp = hagedorn_coefficients(ds_quarter_state, [order])
        assert abs(exp.coefficients[(order,)]) > 0
        for (k,) in exp.coefficients:
            assert k <= order
            assert (order - k) % 2 == 0


def test_coefficients_norm_matches_closed_form(ds_quarter_state):
    for k in (0, 1, 2, 5):
        exp = hagedorn_coefficients(ds_quarter_state, [k])
        assert abs(exp.norm() - ds_norm(DS, k, T_STAR)) < 1e-8


def test_coefficients_reject_deep_index(ds_quarter_state):
    with pytest.raises(DimensionMismatch):
        hagedorn_coefficients(ds_quarter_state, [40])


# -- direct grid evaluation of the evolved state ---------------------------------


def test_evolved_grid_at_time_zero_is_plain_packet():
    state = propagate(L0_FRAME, ORIGIN, DS_HAM, np.array([0.0]))[0]
    direct = evolved_state_on_grid(state, [2], 1.0, GRID_1D)
    ref = eval_excited(WavepacketParams(frame=L0_FRAME, center=ORIGIN, eps=1.0), [2], GRID_1D)
    assert np.max(np.abs(direct - ref)) < 1e-12


def test_evolved_grid_hermitian_is_phase_times_packet():
    state = propagate(L0_FRAME, np.array([0.3, -0.2]), harmonic(), np.array([0.7]))[0]
    direct = evolved_state_on_grid(state, [1], 1.0, GRID_1D)
    ref = np.exp(1j * state.action) * eval_excited(
        WavepacketParams(frame=state.Z, center=state.z, eps=1.0, log_det_q=state.logdetQ),
        [1],
        GRID_1D,
    )
    assert np.max(np.abs(direct - ref)) < 1e-9


def test_evolved_grid_norm_and_expansion_consistency(ds_quarter_state):
    state = ds_quarter_state
    field = evolved_state_on_grid(state, [2], 1.0, GRID_1D)
    norm = math.sqrt(grid_inner(field, field, GRID_1D).real)
    assert abs(norm - 1.685285669321012) < 1e-6
    exp = hagedorn_coefficients(state, [2])
    assert abs(norm - exp.norm()) < 1e-8
    # pointwise: prefactor times the expansion over evolved basis packets
    acc = np.zeros(GRID_1D.counts, dtype=complex)
    for k, a in exp.coefficients.items():
        acc += a * eval_excited(
            WavepacketParams(
                frame=state.Z, center=state.z, eps=1.0, phase=0.0, log_det_q=state.logdetQ
            ),
            list(k),
            GRID_1D,
        )
    acc *= np.exp(state.log_prefactor)
    assert np.max(np.abs(acc - field)) < 1e-8


# -- ladder recombination ---------------------------------------------------------


def test_ladder_identities_along_trajectory(ds_trajectory):
    # the conjugate-flown frame decomposes over the evolved frame pair; the
    # lowering block equals the normalizer and reassembles the quarter form
    _, states = ds_trajectory
    om = omega(1)
    Z0 = L0_FRAME.entries
    for s in states:
        Zt = s.Z.entries
        conj_flow = s.S.conj() @ Z0
        flow_conj = s.S @ Z0.conj()
        C = 0.5j * Zt.conj().T @ om.T @ conj_flow
        D = 0.5j * Zt.conj().T @ om.T @ flow_conj
        assert np.max(np.abs(C - s.N)) < 1e-8
        assert np.max(np.abs(Zt @ C + Zt.conj() @ D.conj() - conj_flow)) < 1e-8
        assert np.max(np.abs(D.T @ C.conj() - s.M)) < 1e-8


def test_expansion_norm_formula():
    exp = HagedornExpansion(coefficients={(0,): 0.6, (2,): 0.8j}, log_prefactor=0.25j)
    assert abs(exp.norm() - 1.0) < 1e-14

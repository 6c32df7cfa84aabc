"""Tests for the pattern controller.

Proves:

Group 1 -- Configuration
  Filter and controller invariants are enforced; the pulse-number
  constructor pins horizon = 2/(f1*p).

Group 2 -- Discrete filters
  The complex-sample stepper agrees with scipy's reference difference
  equation, settles to unit dc gain, and its steady-state tone response
  matches the continuous prototype away from the Nyquist region.

Group 3 -- Volt-second demands
  Frozen per-phase corrections for unit channel errors, linear scaling,
  and the delta unwind of converter II.

Group 4 -- Transition shifting
  A demanded volt-second area moves an edge by area/(vdc/2 * du) seconds;
  clamps against the window start, committed floors, and the next edge
  carry the unserved remainder; caps bound per-edge absorption; zero
  demand leaves nominal instants bit-exact.

Group 5 -- Closed-loop stepping
  On the nominal trajectory the controller reproduces the nominal
  switching instants exactly; a current error moves edges; mismatched
  grid frequency is rejected.
"""

import math

import numpy as np
import pytest
from scipy import signal as sp_signal

from mp3csim import opp, plant, trajectory
from mp3csim.frames import DELTA_ROTATION, clarke
from mp3csim.mp3c import (
    SHIFT_FLOOR,
    ControllerConfig,
    DiscreteFilter,
    FilterConfig,
    Mp3cController,
    controller_step,
    current_errors,
    shift_transitions,
    volt_second_demand,
)
from mp3csim.smallsignal import filter_tf

_GRID = plant.GridConfig(phi_ini=0.3)
_PARAMS = plant.PlantParams()
_VDC = 108393.5673071356


def _rated_trajectory(d=2):
    op, refs = trajectory.operating_point_for_current(
        _VDC, plant.I_RATED_PEAK + 0j, 0j, _GRID, _PARAMS
    )
    pat = opp.optimize(d, refs.m1)
    assignment = trajectory.assign_patterns(refs, _VDC, pat)
    return trajectory.build_trajectory(assignment, _GRID, _PARAMS)


def _event(t, converter=0, phase=0, du=1.0, gap=5e-4):
    return trajectory.GateEvent(
        t=t, converter=converter, phase=phase, du=du, u_after=du, gap=gap
    )


# ------------------------------------------------- group 1: configuration --


def test_filter_config_validation():
    FilterConfig(1, 50.0)
    FilterConfig(2, 15e3)
    with pytest.raises(ValueError):
        FilterConfig(3, 50.0)
    with pytest.raises(ValueError):
        FilterConfig(1, 0.0)


def test_controller_config_validation():
    with pytest.raises(ValueError):
        ControllerConfig(Td=0.0, p=14, horizon=1e-3)
    with pytest.raises(ValueError):
        ControllerConfig(Td=25e-6, p=14, horizon=20e-6)
    with pytest.raises(ValueError):
        ControllerConfig(Td=25e-6, p=1, horizon=1e-3)
    with pytest.raises(ValueError):
        ControllerConfig(Td=25e-6, p=14, horizon=1e-3, err_scale=0.0)


def test_pulse_number_constructor_pins_horizon():
    cfg = ControllerConfig.for_pulse_number(14, 50.0)
    assert cfg.horizon == pytest.approx(2.0 / (50.0 * 14), rel=1e-15)
    assert cfg.f1 == pytest.approx(50.0, rel=1e-15)
    assert cfg.Td == 25e-6
    cfg22 = ControllerConfig.for_pulse_number(22, 50.0, err_scale=1.5)
    assert cfg22.f1 == pytest.approx(50.0, rel=1e-15)
    assert cfg22.err_scale == 1.5


# ----------------------------------------------- group 2: discrete filters --


@pytest.mark.parametrize("cfg", [FilterConfig(1, 50.0), FilterConfig(2, 15e3)])
def test_filter_matches_reference_difference_equation(cfg):
    Td = 25e-6
    wc = 2.0 * math.pi * cfg.cutoff
    if cfg.order == 1:
        proto = ([wc], [1.0, wc])
    else:
        proto = ([wc * wc], [1.0, math.sqrt(2.0) * wc, wc * wc])
    b, a = sp_signal.bilinear(*proto, fs=1.0 / Td)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    want = sp_signal.lfilter(b, a, x)
    filt = DiscreteFilter(cfg, Td)
    got = np.array([filt.push(v) for v in x])
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("cfg", [FilterConfig(1, 50.0), FilterConfig(2, 15e3)])
def test_filter_settles_to_unit_dc_gain(cfg):
    filt = DiscreteFilter(cfg, 25e-6)
    y = 0j
    for _ in range(4000):
        y = filt.push(1.0 + 0j)
    assert y == pytest.approx(1.0 + 0j, abs=1e-5)


def test_filter_tone_response_matches_continuous_prototype():
    Td = 25e-6
    f0 = 2000.0
    w = 2.0 * math.pi * f0
    for cfg in (FilterConfig(1, 50.0), FilterConfig(2, 15e3)):
        filt = DiscreteFilter(cfg, Td)
        y = 0j
        for n in range(6000):
            x = np.exp(1j * w * n * Td)
            y = filt.push(x)
        ratio = y / np.exp(1j * w * 5999 * Td)
        assert ratio == pytest.approx(filter_tf(cfg, 1j * w), rel=2e-2)


def test_filter_reset_restores_initial_state():
    filt = DiscreteFilter(FilterConfig(2, 15e3), 25e-6)
    first = [filt.push(v) for v in (1.0, 1j, -2.0)]
    filt.reset()
    second = [filt.push(v) for v in (1.0, 1j, -2.0)]
    assert first == second


# -------------------------------------------- group 3: volt-second demand --


def test_demand_for_unit_sum_error():
    d1, d2 = volt_second_demand(1.0 + 0j, 0j, _PARAMS)
    # alpha error maps to phase a of converter I: 2*Lt/2 = Lt volt-seconds
    assert d1[0] == pytest.approx(_PARAMS.Lt, rel=1e-12)
    assert d1[1] == pytest.approx(-0.5 * _PARAMS.Lt, rel=1e-12)
    assert d1[2] == pytest.approx(-0.5 * _PARAMS.Lt, rel=1e-12)
    # converter II carries the same correction seen through the delta
    assert clarke(*d2) * DELTA_ROTATION == pytest.approx(
        complex(_PARAMS.Lt, 0.0), abs=1e-15
    )


def test_demand_for_unit_difference_error():
    d1, d2 = volt_second_demand(0j, 1.0 + 0j, _PARAMS)
    assert clarke(*d1) == pytest.approx(0.5 * _PARAMS.Ls + 0j, abs=1e-15)
    assert clarke(*d2) * DELTA_ROTATION == pytest.approx(
        -0.5 * _PARAMS.Ls + 0j, abs=1e-15
    )


def test_demand_scales_linearly():
    base1, base2 = volt_second_demand(0.3 - 0.7j, 0.1j, _PARAMS)
    big1, big2 = volt_second_demand(0.3 - 0.7j, 0.1j, _PARAMS, err_scale=1.5)
    assert big1 == pytest.approx(tuple(1.5 * v for v in base1), rel=1e-12)
    assert big2 == pytest.approx(tuple(1.5 * v for v in base2), rel=1e-12)
    zero1, zero2 = volt_second_demand(0j, 0j, _PARAMS)
    assert zero1 == (0.0, 0.0, 0.0)
    assert zero2 == (0.0, 0.0, 0.0)


# ------------------------------------------- group 4: transition shifting --


def test_shift_moves_edge_by_area_over_half_vdc():
    ev = _event(1e-3)
    times, residual = shift_transitions([ev], {(0, 0): 2.665e-3}, 5330.0, 0.0)
    assert times[0] == pytest.approx(ev.t - 1e-6, abs=1e-15)
    assert residual[(0, 0)] == pytest.approx(0.0, abs=1e-12)


def test_shift_clamps_at_window_start_and_carries_residual():
    ev = _event(1e-3)
    want = 2665.0 * 50e-6  # worth 50 us of advance
    times, residual = shift_transitions(
        [ev], {(0, 0): want}, 5330.0, ev.t - 20e-6
    )
    assert times[0] == pytest.approx(ev.t - 20e-6, rel=1e-12)
    assert residual[(0, 0)] == pytest.approx(0.6 * want, rel=1e-9)


def test_negative_demand_delays_the_edge():
    ev = _event(1e-3)
    times, residual = shift_transitions([ev], {(0, 0): -2.665e-3}, 5330.0, 0.0)
    assert times[0] == pytest.approx(ev.t + 1e-6, abs=1e-15)
    assert residual[(0, 0)] == pytest.approx(0.0, abs=1e-12)


def test_falling_edge_advances_on_negative_demand():
    ev = _event(1e-3, converter=1, phase=2, du=-1.0)
    times, _ = shift_transitions([ev], {(1, 2): -2.665e-3}, 5330.0, 0.0)
    assert times[0] == pytest.approx(ev.t - 1e-6, abs=1e-15)


def test_committed_floor_blocks_the_advance():
    ev = _event(1e-3)
    floor = ev.t - 0.4e-6
    times, residual = shift_transitions(
        [ev], {(0, 0): 2.665e-3}, 5330.0, 0.0, floors={(0, 0): floor}
    )
    assert times[0] == pytest.approx(floor, rel=1e-12)
    assert residual[(0, 0)] == pytest.approx(0.6 * 2.665e-3, rel=1e-9)


def test_delay_stops_at_next_nominal_edge():
    first = _event(1e-3, du=1.0)
    second = _event(1.2e-3, du=-1.0)
    want = -2665.0 * 500e-6  # delay the rising edge by 500 us
    times, residual = shift_transitions(
        [first, second], {(0, 0): want}, 5330.0, 0.0
    )
    # the rising edge stops at the falling edge's nominal slot and the
    # falling edge, pinned behind it, absorbs nothing
    assert times[0] == second.t
    assert times[1] == second.t
    assert residual[(0, 0)] == pytest.approx(0.6 * want, rel=1e-9)


def test_caps_bound_each_edge_and_accounting_closes():
    rng = np.random.default_rng(11)
    events = [
        _event(2e-4 * (k + 1), du=1.0 if k % 2 == 0 else -1.0, gap=2e-4)
        for k in range(6)
    ]
    caps = list(rng.uniform(-0.02, 0.02, len(events)))
    demand = 0.05
    times, residual = shift_transitions(
        events, {(0, 0): demand}, 5330.0, 0.0, caps=caps
    )
    delivered = sum(
        (ev.t - tn) * 0.5 * 5330.0 * ev.du for ev, tn in zip(events, times)
    )
    assert delivered + residual[(0, 0)] == pytest.approx(demand, rel=1e-12)
    for ev, tn, cap in zip(events, times, caps):
        moved = (ev.t - tn) * 0.5 * 5330.0 * ev.du
        assert moved <= max(cap, 0.0) + 1e-12
        assert moved >= min(cap, 0.0) - 1e-12
    # stream stays ordered
    assert all(t1 <= t2 for t1, t2 in zip(times, times[1:]))


def test_zero_demand_keeps_times_bit_exact():
    events = [_event(1e-3 + 0.1 * k / 3.0) for k in range(3)]
    times, residual = shift_transitions(
        [ev for ev in events], {(0, 0): 0.0}, 5330.0, 0.0, caps=[0.0, -0.0, 0.0]
    )
    assert all(tn == ev.t for tn, ev in zip(times, events))
    assert residual[(0, 0)] == 0.0


def test_caps_must_align_with_events():
    with pytest.raises(ValueError):
        shift_transitions([_event(1e-3)], {(0, 0): 1.0}, 5330.0, 0.0, caps=[])


# --------------------------------------------- group 5: controller steps --


def test_zero_error_run_keeps_nominal_instants_bit_exact():
    traj = _rated_trajectory(d=2)
    cfg = ControllerConfig.for_pulse_number(traj.assignment.pattern1.p, 50.0)
    ctl = Mp3cController(traj, cfg, _PARAMS)
    steps = int(round(2.0 / 50.0 / cfg.Td))  # two fundamental periods
    seen = []
    for k in range(steps):
        t = k * cfg.Td
        state = plant.PlantState(t=t, i_sum=traj.i_sum(t), i_diff=traj.i_diff(t))
        sched = controller_step(ctl, state, t, v_pcc=traj.grid.v_pcc(t))
        assert sched.t_start == pytest.approx(t + cfg.Td, rel=1e-12)
        seen.extend(sched.events)
    nominal = traj.events_between(cfg.Td, (steps + 1) * cfg.Td)
    assert len(seen) == len(nominal)
    for got, want in zip(seen, nominal):
        assert got.time == want.t  # bit-exact
        assert (got.converter, got.phase) == (want.converter, want.phase)
        assert got.du == want.du and got.u_after == want.u_after


def test_current_error_moves_edges():
    traj = _rated_trajectory(d=2)
    cfg = ControllerConfig.for_pulse_number(traj.assignment.pattern1.p, 50.0)
    ctl = Mp3cController(traj, cfg, _PARAMS)
    # place the window right on top of a known event
    ev = traj.events[3]
    t = ev.t - 1.5 * cfg.Td
    state = plant.PlantState(
        t=t, i_sum=traj.i_sum(t) - 30.0, i_diff=traj.i_diff(t)
    )
    sched = ctl.step(state, t, v_pcc=traj.grid.v_pcc(t))
    assert sched.events, "window around a nominal edge must schedule it"
    moved = [e for e in sched.events if abs(e.time - ev.t) >= SHIFT_FLOOR]
    assert moved, "a 30 A tracking error must shift at least one edge"
    for e in sched.events:
        assert e.time >= sched.t_start - 1e-15


def test_error_sign_sets_shift_direction():
    traj = _rated_trajectory(d=2)
    cfg = ControllerConfig.for_pulse_number(traj.assignment.pattern1.p, 50.0)
    ev = traj.events[3]
    t = ev.t - 1.5 * cfg.Td
    shifts = {}
    for sign in (+1.0, -1.0):
        ctl = Mp3cController(traj, cfg, _PARAMS)
        state = plant.PlantState(
            t=t, i_sum=traj.i_sum(t) - sign * 30.0, i_diff=traj.i_diff(t)
        )
        sched = ctl.step(state, t, v_pcc=traj.grid.v_pcc(t))
        match = [
            e
            for e in sched.events
            if (e.converter, e.phase) == (ev.converter, ev.phase)
        ]
        shifts[sign] = match[0].time - ev.t
    # opposite errors push the same edge in opposite directions
    assert shifts[+1.0] * shifts[-1.0] < 0.0


def test_current_errors_reports_raw_tracking_error():
    traj = _rated_trajectory(d=2)
    state = plant.PlantState(
        t=1e-3, i_sum=traj.i_sum(1e-3) - (3.0 + 4.0j), i_diff=traj.i_diff(1e-3)
    )
    e_sum, e_diff = current_errors(traj, state, 1e-3)
    assert e_sum == pytest.approx(3.0 + 4.0j, abs=1e-12)
    assert e_diff == pytest.approx(0j, abs=1e-12)


def test_grid_frequency_mismatch_is_rejected():
    traj = _rated_trajectory(d=2)
    cfg = ControllerConfig.for_pulse_number(traj.assignment.pattern1.p, 60.0)
    with pytest.raises(ValueError):
        Mp3cController(traj, cfg, _PARAMS)

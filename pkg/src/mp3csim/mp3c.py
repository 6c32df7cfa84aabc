"""Pattern controller: trajectory tracking by shifting switching instants.

Each implementation period the controller samples the currents, filters
the tracking errors of the sum and difference channels, and converts
them into per-phase volt-second correction rates.  Upcoming switching
edges are then moved against their nominal instants: advancing an edge
with step du by delta seconds injects (vdc/2)*du*delta volt-seconds.

Corrections are released at a paced rate rather than dumped onto the
nearest edges: each edge may absorb at most rate * weight seconds of
correction per pass, where the weight is the edge's Voronoi cell of the
pattern (half the dwell on each side).  The cells of one phase tile the
period, so a persistent error is worked off with a first-order response
whose 10-90% rise time equals the controller horizon 2/(f1*p) and the
loop keeps the proportional gain K = ln(9)*Lt/horizon used by the
linearized impedance model.

Because the per-phase release windows open only when an edge passes,
the delivered correction is a lumpy, phase-staggered version of the
smooth drive the gain model assumes; sampled at the controller rate,
that mismatch aliases band-frequency content onto the slow region
where the loop gain is high and the loop would chase its own release
artifacts.  The controller therefore integrates, in closed form, the
plant response to the difference between the released rectangles and
a pretend drive, and adds it back onto the sampled error.  The
pretend drive is the commanded rate held over each window plus a
band-passed return of the running surplus of released over commanded
volt-seconds (washed in at half-horizon scale, retracted again at
two-horizon scale): the release texture and its slow aliased images
are compensated, while the mid-band content of a transient delivery
lag returns quickly enough that transients and clamped shortfalls
keep driving the loop.  With no corrections pending the compensation
is exactly zero and an unperturbed loop reproduces the nominal
pattern bit-exact.

A deviation of the measured PCC voltage from its nominal phasor feeds
forward onto both converters through the same anti-aliasing filter and a
low-pass in the rotating frame.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .frames import DELTA_ROTATION, clarke, inverse_clarke
from .plant import PlantParams, PlantState
from .smallsignal import LN9
from .trajectory import GateEvent, NominalTrajectory

__all__ = [
    "SHIFT_FLOOR",
    "FilterConfig",
    "ControllerConfig",
    "DiscreteFilter",
    "ScheduledEvent",
    "GateSchedule",
    "current_errors",
    "volt_second_demand",
    "shift_transitions",
    "Mp3cController",
    "controller_step",
]

# shifts below the floor are dropped so that an unperturbed loop keeps
# the nominal instants bit-exact instead of accumulating femtosecond noise
SHIFT_FLOOR = 1e-10

# washout scales of the release-surplus return, in controller horizons
_WASH_SCALE = 0.2
_RETRACT_SCALE = 1.0

def _rl_response(h: complex, age_a: float, age_b: float, R: float, L: float) -> complex:
    """Current at the present instant from a voltage rectangle of height
    ``h`` across a series RL branch, applied from ``age_a`` until ``age_b``
    seconds ago (``age_a >= age_b >= 0``)."""
    if R * age_a < 1e-12 * L:
        return h * (age_a - age_b) / L
    return h / R * (math.exp(-age_b * R / L) - math.exp(-age_a * R / L))


@dataclass(frozen=True)
class FilterConfig:
    """Low-pass filter description shared by controller and model."""

    order: int
    cutoff: float  # [Hz]

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ValueError("filter order must be 1 or 2")
        if self.cutoff <= 0.0:
            raise ValueError("cutoff must be positive")


@dataclass(frozen=True)
class ControllerConfig:
    """Sampling, horizon, and filter settings of the pattern controller."""

    Td: float  # implementation period [s]
    p: int  # pulse number of the assigned patterns
    horizon: float  # correction horizon 2/(f1*p) [s]
    err_scale: float = 1.0
    h_al: FilterConfig = field(default_factory=lambda: FilterConfig(2, 15e3))
    h_pcc: FilterConfig = field(default_factory=lambda: FilterConfig(1, 50.0))

    def __post_init__(self) -> None:
        if self.Td <= 0.0:
            raise ValueError("Td must be positive")
        if self.horizon <= self.Td:
            raise ValueError("horizon must exceed Td")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.err_scale <= 0.0:
            raise ValueError("err_scale must be positive")

    @classmethod
    def for_pulse_number(
        cls, p: int, f1: float, Td: float = 25e-6, **kwargs
    ) -> "ControllerConfig":
        return cls(Td=Td, p=p, horizon=2.0 / (f1 * p), **kwargs)

    @property
    def f1(self) -> float:
        return 2.0 / (self.horizon * self.p)


class DiscreteFilter:
    """Bilinear-mapped low-pass running on complex samples at rate 1/Td."""

    def __init__(self, cfg: FilterConfig, Td: float):
        wc = 2.0 * math.pi * cfg.cutoff
        if cfg.order == 1:
            num, den = [wc], [1.0, wc]
        else:
            num, den = [wc * wc], [1.0, math.sqrt(2.0) * wc, wc * wc]
        b, a = signal.bilinear(num, den, fs=1.0 / Td)
        b, a = np.atleast_1d(b) / a[0], np.atleast_1d(a) / a[0]
        n = 3  # transposed direct form II with up to two delay slots
        self._b = np.concatenate([b, np.zeros(n - len(b))])
        self._a = np.concatenate([a, np.zeros(n - len(a))])
        self._z = [0j, 0j]

    def push(self, x: complex) -> complex:
        b, a, z = self._b, self._a, self._z
        y = b[0] * x + z[0]
        z[0] = b[1] * x - a[1] * y + z[1]
        z[1] = b[2] * x - a[2] * y
        return y

    def reset(self) -> None:
        self._z = [0j, 0j]


def current_errors(
    trajectory: NominalTrajectory, state: PlantState, t: float
) -> tuple[complex, complex]:
    """Raw tracking errors i* - i of both channels at time t."""
    return (
        trajectory.i_sum(t) - state.i_sum,
        trajectory.i_diff(t) - state.i_diff,
    )


def volt_second_demand(
    i_err_sum: complex,
    i_err_diff: complex,
    params: PlantParams,
    err_scale: float = 1.0,
) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Deadbeat per-phase volt-second corrections for both converters.

    The sum error is corrected through v_sum/2, hence the factor 2; the
    split onto the converters mirrors v_I = (v_sum+v_diff)/2, and
    converter II is unwound into its own frame behind the delta winding.
    """
    lam_sum = 2.0 * params.Lt * err_scale * i_err_sum
    lam_diff = params.Ls * err_scale * i_err_diff
    lam1 = 0.5 * (lam_sum + lam_diff)
    lam2 = 0.5 * (lam_sum - lam_diff) / DELTA_ROTATION
    return inverse_clarke(lam1), inverse_clarke(lam2)


def shift_transitions(
    events: list[GateEvent],
    demands: dict[tuple[int, int], float],
    vdc: float,
    t_start: float,
    caps: list[float] | None = None,
    floors: dict[tuple[int, int], float] | None = None,
) -> tuple[list[float], dict[tuple[int, int], float]]:
    """Greedy deadbeat allocation of volt-second demands onto edges.

    Walks each converter phase's events in time order.  An edge with step
    du moved earlier by delta injects (vdc/2)*du*delta volt-seconds; the
    wanted shift is clamped between the previous edge of the same phase
    (or the phase floor, or t_start) and the next edge's nominal instant,
    and whatever the clamp refuses carries to the next edge.  Returns the
    modified times aligned with the input order plus the per-phase
    residual demand that no edge could absorb.

    caps optionally limits the volt-seconds each edge may absorb, which
    turns the all-at-once deadbeat into the paced release the controller
    uses.
    """
    if caps is not None and len(caps) != len(events):
        raise ValueError("caps must align with events")
    half = 0.5 * vdc
    new_times = [e.t for e in events]
    residual: dict[tuple[int, int], float] = {}
    streams: dict[tuple[int, int], list[int]] = {}
    for idx, ev in enumerate(events):
        streams.setdefault((ev.converter, ev.phase), []).append(idx)
    for key, want in demands.items():
        idxs = streams.get(key, [])
        left = want
        prev = t_start
        if floors is not None and key in floors:
            prev = max(prev, floors[key])
        for n, idx in enumerate(idxs):
            ev = events[idx]
            alloc = left
            if caps is not None:
                cap = caps[idx]
                if alloc >= 0.0:
                    alloc = min(alloc, max(cap, 0.0))
                else:
                    alloc = max(alloc, min(cap, 0.0))
            if alloc == 0.0:
                prev = max(prev, ev.t)
                continue
            delta = alloc / (half * ev.du)
            hi = events[idxs[n + 1]].t if n + 1 < len(idxs) else math.inf
            t_new = min(max(ev.t - delta, prev), hi)
            delivered = (ev.t - t_new) * half * ev.du
            left -= delivered
            new_times[idx] = t_new
            prev = max(prev, t_new)
        residual[key] = left
    return new_times, residual


@dataclass(frozen=True)
class ScheduledEvent:
    """One gate edge committed for execution."""

    time: float
    converter: int
    phase: int
    du: float
    u_after: float


@dataclass(frozen=True)
class GateSchedule:
    """Edges committed by one controller step.

    Covers the nominal window [t_start, t_end); a clamped delay may push
    an edge's execution time past t_end, never before t_start.
    """

    t_start: float
    t_end: float
    events: tuple[ScheduledEvent, ...]


class Mp3cController:
    """Receding-horizon pattern controller over a nominal trajectory.

    Each step at time t commits the edges whose nominal instants fall in
    [t+Td, t+2Td), shifted by the paced corrections; one implementation
    period of computation delay separates sampling and actuation.
    """

    def __init__(
        self,
        trajectory: NominalTrajectory,
        config: ControllerConfig,
        params: PlantParams,
    ):
        if abs(config.f1 - trajectory.grid.f1) > 1e-9 * trajectory.grid.f1:
            raise ValueError("controller horizon disagrees with grid frequency")
        self.trajectory = trajectory
        self.config = config
        self.params = params
        scale = config.err_scale * LN9 / config.horizon
        self._rate_sum = 2.0 * params.Lt * scale  # V per A of sum error
        self._rate_diff = params.Ls * scale
        self._f_err_sum = DiscreteFilter(config.h_al, config.Td)
        self._f_err_diff = DiscreteFilter(config.h_al, config.Td)
        self._f_pcc_al = DiscreteFilter(config.h_al, config.Td)
        self._f_pcc_lp = DiscreteFilter(config.h_pcc, config.Td)
        self._committed: dict[tuple[int, int], float] = {}
        # release weights are the per-stream Voronoi cells of the base
        # period (half the dwell on each side of an edge); the cells of
        # one stream tile the period, so its weights sum to one period
        streams: dict[tuple[int, int], list[GateEvent]] = {}
        for ev in trajectory.events:
            streams.setdefault((ev.converter, ev.phase), []).append(ev)
        self._weights: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        for key, evs in streams.items():
            evs.sort(key=lambda e: e.t)
            times = np.array([e.t for e in evs])
            gaps = np.array([e.gap for e in evs])
            cells = 0.5 * (gaps + np.roll(gaps, -1))
            mids = 0.5 * (times[:-1] + times[1:])
            self._weights[key] = (mids, cells)
        # response of the plant to the difference between the released
        # corrections (short voltage rectangles at the shifted edges)
        # and the pretend drive of the gain model; adding it back onto
        # the sampled error keeps the loop from chasing artifacts of
        # its own release timing
        self._ghost_sum = 0j
        self._ghost_diff = 0j
        self._ghost_t = 0.0
        self._segments: list[tuple[float, float, complex, complex]] = []
        # running surplus of released over commanded volt-seconds, fed
        # back into the pretend drive with a fast washout and retracted
        # again at a slow scale: the net-zero dc return keeps the
        # persistent aliased release texture compensated while the
        # mid-band content of a transient shortfall still comes back
        # quickly enough to drive the loop
        self._tau_wash = _WASH_SCALE * config.horizon
        self._tau_retract = _RETRACT_SCALE * config.horizon
        self._def_fast = [0j, 0j]
        self._def_slow = [0j, 0j]

    def _weight(self, ev: GateEvent) -> float:
        mids, weights = self._weights[(ev.converter, ev.phase)]
        tau = ev.t % self.trajectory.period
        return float(weights[np.searchsorted(mids, tau)])

    def _advance_ghost(self, t: float) -> None:
        t0, p = self._ghost_t, self.params
        if t <= t0:
            return
        self._ghost_sum *= math.exp(-(t - t0) * p.Rt / p.Lt)
        self._ghost_diff *= math.exp(-(t - t0) * p.Rs / p.Ls)
        keep: list[tuple[float, float, complex, complex]] = []
        for lo, hi, h_sum, h_diff in self._segments:
            a, b = max(lo, t0), min(hi, t)
            if b > a:
                self._ghost_sum += _rl_response(h_sum, t - a, t - b, p.Rt, p.Lt)
                self._ghost_diff += _rl_response(h_diff, t - a, t - b, p.Rs, p.Ls)
            if hi > t:
                keep.append((max(lo, t), hi, h_sum, h_diff))
        self._segments = keep
        self._ghost_t = t

    def step(
        self, state: PlantState, t: float, v_pcc: complex | None = None
    ) -> GateSchedule:
        traj, cfg = self.trajectory, self.config
        self._advance_ghost(t)
        err_sum = self._f_err_sum.push(traj.i_sum(t) - state.i_sum + self._ghost_sum)
        err_diff = self._f_err_diff.push(traj.i_diff(t) - state.i_diff + self._ghost_diff)
        v_ff = 0j
        if v_pcc is not None:
            dv = self._f_pcc_al.push(v_pcc - traj.grid.v_pcc(t))
            rot = cmath.exp(1j * traj.grid.phi(t))
            v_ff = self._f_pcc_lp.push(dv / rot) * rot
        r_sum = self._rate_sum * err_sum
        r_diff = self._rate_diff * err_diff
        r1 = 0.5 * (r_sum + r_diff) + v_ff
        r2 = (0.5 * (r_sum - r_diff) + v_ff) / DELTA_ROTATION
        rates = (inverse_clarke(r1), inverse_clarke(r2))

        t0, t1 = t + cfg.Td, t + 2.0 * cfg.Td
        events = traj.events_between(t0, t1)
        caps = [rates[ev.converter][ev.phase] * self._weight(ev) for ev in events]
        demands: dict[tuple[int, int], float] = {}
        for ev, cap in zip(events, caps):
            key = (ev.converter, ev.phase)
            demands[key] = demands.get(key, 0.0) + cap
        new_times, _ = shift_transitions(
            events,
            demands,
            traj.assignment.vdc,
            t0,
            caps=caps,
            floors=self._committed,
        )
        half_vdc = 0.5 * traj.assignment.vdc
        scheduled = []
        rel_sum = 0j
        rel_diff = 0j
        for ev, t_new in zip(events, new_times):
            if abs(t_new - ev.t) < SHIFT_FLOOR:
                t_new = ev.t
            key = (ev.converter, ev.phase)
            self._committed[key] = max(self._committed.get(key, t_new), t_new)
            if t_new != ev.t:
                # a shifted edge changes the drive by du*vdc/2 in its own
                # phase between the new and the nominal instant
                lo, hi = (t_new, ev.t) if t_new < ev.t else (ev.t, t_new)
                phases = [0.0, 0.0, 0.0]
                phases[ev.phase] = ev.du * half_vdc * (1.0 if t_new < ev.t else -1.0)
                h = 0.5 * clarke(*phases)
                if ev.converter:
                    hs, hd = h * DELTA_ROTATION, -h * DELTA_ROTATION
                else:
                    hs, hd = h, h
                self._segments.append((lo, hi, hs, hd))
                rel_sum += hs * (hi - lo)
                rel_diff += hd * (hi - lo)
            scheduled.append(
                ScheduledEvent(
                    time=t_new,
                    converter=ev.converter,
                    phase=ev.phase,
                    du=ev.du,
                    u_after=ev.u_after,
                )
            )
        # the pretend drive: the commanded rates held over the window,
        # plus the band-passed return of the accumulated surplus of
        # released over commanded volt-seconds, so a transient delivery
        # lag stays visible to the loop without re-opening the aliasing
        # path for the slow image content
        w = t1 - t0
        held_sum = 0.5 * r_sum + v_ff
        held_diff = 0.5 * r_diff
        p = self.params
        decay_sum = math.exp(-w * p.Rt / p.Lt)
        decay_diff = math.exp(-w * p.Rs / p.Ls)
        x_sum = rel_sum - held_sum * w
        x_diff = rel_diff - held_diff * w
        ka = -math.expm1(-w / self._tau_wash)
        kb = -math.expm1(-w / self._tau_retract)
        fast, slow = self._def_fast, self._def_slow
        fast[0] = fast[0] * decay_sum + x_sum
        fast[1] = fast[1] * decay_diff + x_diff
        slow[0] = slow[0] * decay_sum + x_sum
        slow[1] = slow[1] * decay_diff + x_diff
        ret_sum = fast[0] * ka - slow[0] * kb
        ret_diff = fast[1] * ka - slow[1] * kb
        fast[0] *= 1.0 - ka
        fast[1] *= 1.0 - ka
        slow[0] *= 1.0 - kb
        slow[1] *= 1.0 - kb
        pre_sum = held_sum + ret_sum / w
        pre_diff = held_diff + ret_diff / w
        if pre_sum != 0 or pre_diff != 0:
            self._segments.append((t0, t1, -pre_sum, -pre_diff))
        scheduled.sort(key=lambda e: (e.time, e.converter, e.phase))
        return GateSchedule(t_start=t0, t_end=t1, events=tuple(scheduled))


def controller_step(
    controller: Mp3cController,
    state: PlantState,
    t: float,
    v_pcc: complex | None = None,
) -> GateSchedule:
    """One receding-horizon step; see Mp3cController.step."""
    return controller.step(state, t, v_pcc)

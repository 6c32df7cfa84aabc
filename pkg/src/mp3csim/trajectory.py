"""Nominal steady-state trajectory of the dual-converter connection.

Builds everything the controller and simulator treat as "nominal" at one
operating point: feedforward voltage references for both channels, the
per-converter pattern assignment with its angle offsets, the time-domain
gate event stream over one fundamental period, and the exact periodic
current trajectory of both RL channels under the switched voltages.

Converter II couples through a delta winding: its line-side space vector
is the internal one rotated by -30 degrees, so its pattern runs offset by
+30 degrees to land on the same sum-channel fundamental.
"""

from __future__ import annotations

import bisect
import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .frames import DELTA_ROTATION, clarke
from .opp import OperatingPoint, SwitchingPattern, expand_pattern
from .plant import GridConfig, PlantParams, RLChannel

__all__ = [
    "ReferenceSet",
    "ConverterAssignment",
    "GateEvent",
    "PeriodicChannelSolution",
    "NominalTrajectory",
    "voltage_references",
    "reference_set",
    "assign_patterns",
    "operating_point_for_current",
    "build_trajectory",
]

_TWO_PI = 2.0 * math.pi


def voltage_references(
    i_sum_ref_dq: complex,
    i_diff_ref_dq: complex,
    grid: GridConfig,
    params: PlantParams,
) -> tuple[complex, complex]:
    """Feedforward dq voltage references holding the current references.

    The sum channel must overcome the PCC voltage (real axis in dq) and
    its aggregate impedance; the difference channel only circulates
    between the converters.
    """
    z_sum = params.Rt + 1j * grid.omega1 * params.Lt
    z_diff = params.Rs + 1j * grid.omega1 * params.Ls
    v_sum = 2.0 * grid.v_pcc_peak + 2.0 * z_sum * i_sum_ref_dq
    v_diff = z_diff * i_diff_ref_dq
    return v_sum, v_diff


@dataclass(frozen=True)
class ReferenceSet:
    """Phasor references shared by trajectory, controller, and reports."""

    i_sum_dq: complex
    i_diff_dq: complex
    v_sum_dq: complex
    v_diff_dq: complex
    v_conv1_dq: complex  # converter I terminal reference
    v_conv2_dq: complex  # converter II internal reference, delta unwound
    m1: float
    m2: float
    offset1: float  # pattern angle of converter I at phi = 0 [rad]
    offset2: float


def reference_set(
    i_sum_ref_dq: complex,
    i_diff_ref_dq: complex,
    vdc: float,
    grid: GridConfig,
    params: PlantParams,
    ref_angle: float = 0.0,
) -> ReferenceSet:
    """Split channel references into per-converter patterns and offsets.

    The pattern fundamental of phase a is b1*(vdc/2)*sin(angle), an alpha
    beta phasor at angle - 90 degrees, so each converter's pattern runs
    offset by the reference phase plus 90 degrees.
    """
    rot = cmath.exp(1j * ref_angle)
    i_sum = i_sum_ref_dq * rot
    i_diff = i_diff_ref_dq * rot
    v_sum, v_diff = voltage_references(i_sum, i_diff, grid, params)
    v1 = 0.5 * (v_sum + v_diff)
    v2_line = 0.5 * (v_sum - v_diff)
    v2 = v2_line / DELTA_ROTATION
    return ReferenceSet(
        i_sum_dq=i_sum,
        i_diff_dq=i_diff,
        v_sum_dq=v_sum,
        v_diff_dq=v_diff,
        v_conv1_dq=v1,
        v_conv2_dq=v2,
        m1=2.0 * abs(v1) / vdc,
        m2=2.0 * abs(v2) / vdc,
        offset1=cmath.phase(v1) + 0.5 * math.pi,
        offset2=cmath.phase(v2) + 0.5 * math.pi,
    )


def operating_point_for_current(
    vdc: float,
    i_sum_ref_dq: complex,
    i_diff_ref_dq: complex = 0j,
    grid: GridConfig | None = None,
    params: PlantParams | None = None,
    ref_angle: float = 0.0,
) -> tuple[OperatingPoint, ReferenceSet]:
    """Operating point implied by current references at a dc-link voltage."""
    grid = grid if grid is not None else GridConfig()
    params = params if params is not None else PlantParams()
    refs = reference_set(i_sum_ref_dq, i_diff_ref_dq, vdc, grid, params, ref_angle)
    op = OperatingPoint(
        m=refs.m1,
        vdc=vdc,
        i_sum_ref_dq=i_sum_ref_dq,
        i_diff_ref_dq=i_diff_ref_dq,
        ref_angle=ref_angle,
    )
    return op, refs


@dataclass(frozen=True)
class ConverterAssignment:
    """Patterns bound to both converters for one operating point."""

    refs: ReferenceSet
    vdc: float
    pattern1: SwitchingPattern
    pattern2: SwitchingPattern


def assign_patterns(
    refs: ReferenceSet,
    vdc: float,
    pattern1: SwitchingPattern,
    pattern2: SwitchingPattern | None = None,
    mismatch_tol: float = 5e-3,
) -> ConverterAssignment:
    """Bind patterns to the converters, checking their fundamentals.

    A pattern whose b1 strays from the converter's modulation index would
    silently shift the fundamental away from the current references.
    """
    pattern2 = pattern2 if pattern2 is not None else pattern1
    for pat, m, tag in ((pattern1, refs.m1, "1"), (pattern2, refs.m2, "2")):
        if abs(pat.b1 - m) > mismatch_tol:
            raise ValueError(
                f"pattern for converter {tag}: b1={pat.b1:.6g} but m={m:.6g}"
            )
    return ConverterAssignment(refs=refs, vdc=vdc, pattern1=pattern1, pattern2=pattern2)


@dataclass(frozen=True)
class GateEvent:
    """One switching edge in the nominal stream.

    gap is the nominal dwell since the previous edge of the same
    converter phase, wrapping around the period; the per-phase gaps of a
    period sum to the period.
    """

    t: float
    converter: int
    phase: int
    du: float
    u_after: float
    gap: float


class PeriodicChannelSolution:
    """Exact periodic solution of one RL channel under segment drives.

    The one-period map of the linear channel is affine in the initial
    current; solving the fixed point gives the steady state without any
    transient integration.
    """

    def __init__(
        self,
        channel: RLChannel,
        times: list[float],
        u_consts: list[complex],
        period: float,
    ):
        if len(times) != len(u_consts) or not times or times[0] != 0.0:
            raise ValueError("segment times must start at 0 and match drives")
        self.channel = channel
        self.times = list(times)
        self.u_consts = list(u_consts)
        self.period = period
        a, b = 1.0 + 0j, 0j
        bounds = self.times[1:] + [period]
        for t0, t1, u in zip(self.times, bounds, self.u_consts):
            decay = cmath.exp(-(t1 - t0) * channel.R / channel.L)
            p0 = channel.particular(t0, u)
            p1 = channel.particular(t1, u)
            a *= decay
            b = decay * b + (p1 - decay * p0)
        self.i0 = b / (1.0 - a)
        self._boundary_i = [self.i0]
        for t0, t1, u in zip(self.times[:-1], self.times[1:], self.u_consts):
            self._boundary_i.append(
                channel.advance(self._boundary_i[-1], t0, t1, u)
            )
        # vectorized-evaluation caches
        self._times_arr = np.array(self.times)
        self._u_arr = np.array(self.u_consts, dtype=complex)
        self._ib_arr = np.array(self._boundary_i, dtype=complex)
        self._pb_arr = np.array(
            [
                channel.particular(t, u)
                for t, u in zip(self.times, self.u_consts)
            ],
            dtype=complex,
        )

    def value(self, t: float) -> complex:
        tau = t % self.period
        j = bisect.bisect_right(self.times, tau) - 1
        return self.channel.advance(
            self._boundary_i[j], self.times[j], tau, self.u_consts[j]
        )

    def values(self, t: np.ndarray) -> np.ndarray:
        ch = self.channel
        tau = np.asarray(t, dtype=float) % self.period
        idx = np.searchsorted(self.times_arr, tau, side="right") - 1
        p_tau = self._u_arr[idx] / ch.R
        for w, _c, residue in ch.tones:
            p_tau = p_tau + residue * np.exp(1j * w * tau)
        decay = np.exp(-(tau - self._times_arr[idx]) * ch.R / ch.L)
        return (self._ib_arr[idx] - self._pb_arr[idx]) * decay + p_tau

    @property
    def times_arr(self) -> np.ndarray:
        return self._times_arr


@dataclass(frozen=True)
class NominalTrajectory:
    """Switched steady state of both channels over one fundamental period."""

    grid: GridConfig  # perturbation stripped
    params: PlantParams
    assignment: ConverterAssignment
    events: tuple[GateEvent, ...]
    seg_times: tuple[float, ...]
    v_sum_segs: tuple[complex, ...]
    v_diff_segs: tuple[complex, ...]
    sum_solution: PeriodicChannelSolution
    diff_solution: PeriodicChannelSolution
    period: float

    def i_sum(self, t: float) -> complex:
        return self.sum_solution.value(t)

    def i_diff(self, t: float) -> complex:
        return self.diff_solution.value(t)

    def i_sum_many(self, t: np.ndarray) -> np.ndarray:
        return self.sum_solution.values(t)

    def i_diff_many(self, t: np.ndarray) -> np.ndarray:
        return self.diff_solution.values(t)

    def voltage_at(self, t: float) -> tuple[complex, complex]:
        tau = t % self.period
        j = bisect.bisect_right(self.seg_times, tau) - 1
        return self.v_sum_segs[j], self.v_diff_segs[j]

    def events_between(self, t0: float, t1: float) -> list[GateEvent]:
        """Periodic continuation of the event stream over [t0, t1)."""
        out = []
        n = math.floor(t0 / self.period)
        while n * self.period < t1:
            base = n * self.period
            for ev in self.events:
                t = base + ev.t
                if t0 <= t < t1:
                    out.append(replace(ev, t=t))
            n += 1
        return out


def _event_times(
    pattern: SwitchingPattern, offset: float, grid: GridConfig
) -> list[tuple[float, int, float, float]]:
    """(time, phase, du, u_after) of one converter over one period."""
    period = 1.0 / grid.f1
    out = []
    for theta, phase, du, u_after in expand_pattern(
        pattern.angles, pattern.steps, pattern.levels, phase_shift=offset
    ):
        t = ((theta - grid.phi_ini) % _TWO_PI) / grid.omega1
        if t >= period:  # guard the wrap of an event at exactly phi_ini
            t -= period
        out.append((t, phase, du, u_after))
    return out


def build_trajectory(
    assignment: ConverterAssignment,
    grid: GridConfig,
    params: PlantParams,
) -> NominalTrajectory:
    """Assemble the nominal event stream and exact periodic currents."""
    grid_nom = replace(grid, perturbation=None)
    period = 1.0 / grid_nom.f1
    refs = assignment.refs
    vdc = assignment.vdc

    raw = []
    for conv, (pat, offset) in enumerate(
        ((assignment.pattern1, refs.offset1), (assignment.pattern2, refs.offset2))
    ):
        for t, phase, du, u_after in _event_times(pat, offset, grid_nom):
            raw.append((t, conv, phase, du, u_after))
    raw.sort()

    events = []
    for conv in (0, 1):
        for phase in range(3):
            mine = [r for r in raw if r[1] == conv and r[2] == phase]
            for prev, cur in zip([mine[-1]] + mine[:-1], mine):
                gap = (cur[0] - prev[0]) % period
                if gap == 0.0 and len(mine) == 1:
                    gap = period
                events.append(
                    GateEvent(
                        t=cur[0], converter=conv, phase=phase,
                        du=cur[3], u_after=cur[4], gap=gap,
                    )
                )
    events.sort(key=lambda e: (e.t, e.converter, e.phase))

    # initial level of each converter phase: the last edge of the period
    # leaves the level that wraps to t = 0
    levels: dict[tuple[int, int], float] = {}
    for ev in events:
        levels[(ev.converter, ev.phase)] = ev.u_after
    for conv, pat in ((0, assignment.pattern1), (1, assignment.pattern2)):
        for phase in range(3):
            if (conv, phase) not in levels:
                raise ValueError(f"converter {conv} phase {phase} never switches")

    seg_times = sorted({0.0} | {ev.t for ev in events if ev.t < period})
    v_sum_segs, v_diff_segs = [], []
    ev_by_time: dict[float, list[GateEvent]] = {}
    for ev in events:
        ev_by_time.setdefault(ev.t, []).append(ev)
    half_vdc = 0.5 * vdc
    for t0 in seg_times:
        for ev in ev_by_time.get(t0, []):
            levels[(ev.converter, ev.phase)] = ev.u_after
        v1 = half_vdc * clarke(levels[(0, 0)], levels[(0, 1)], levels[(0, 2)])
        v2 = half_vdc * clarke(levels[(1, 0)], levels[(1, 1)], levels[(1, 2)])
        v2_line = DELTA_ROTATION * v2
        v_sum_segs.append(v1 + v2_line)
        v_diff_segs.append(v1 - v2_line)

    sum_channel = RLChannel(
        params.Rt, params.Lt, [(w, -c) for w, c in grid_nom.pcc_tones()]
    )
    diff_channel = RLChannel(params.Rs, params.Ls, [])
    sum_solution = PeriodicChannelSolution(
        sum_channel, seg_times, [0.5 * v for v in v_sum_segs], period
    )
    diff_solution = PeriodicChannelSolution(
        diff_channel, seg_times, list(v_diff_segs), period
    )
    return NominalTrajectory(
        grid=grid_nom,
        params=params,
        assignment=assignment,
        events=tuple(events),
        seg_times=tuple(seg_times),
        v_sum_segs=tuple(v_sum_segs),
        v_diff_segs=tuple(v_diff_segs),
        sum_solution=sum_solution,
        diff_solution=diff_solution,
        period=period,
    )

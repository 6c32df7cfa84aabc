"""Closed-loop scenarios, perturbation sweeps, and impedance measurement.

A scenario advances the two RL channels exactly between the instants at
which anything changes: gate edges fired by the pattern controller (or
the nominal pattern when the controller is off) and the controller's own
sampling grid.  Dense output samples are then evaluated in closed form
inside each constant-drive segment, so the recorded traces carry no
integration error at any sample rate.

Impedance is measured one frequency at a time: a single probe tone is
added to the PCC voltage, the loop settles, and the impedance follows
from single-bin Fourier projections of the windowed steady state,
Z(f) = -V(f)/I_sum(f).  Probe frequencies on a common grid with the
fundamental make every window an integer number of periods of both, so
the projections are leakage-free without windowing functions.

The same machinery drives a literal discrete implementation of the
linearized control law (gain, hold, delay, and both feedforward paths),
which closes the loop on the impedance model: its measured curve must
land on the model formula.
"""

from __future__ import annotations

import cmath
import heapq
import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .frames import DELTA_ROTATION, clarke, inverse_clarke
from .mp3c import ControllerConfig, DiscreteFilter, Mp3cController
from .opp import SwitchingPattern
from .plant import GridConfig, Perturbation, PlantParams, PlantState, RLChannel
from .smallsignal import ImpedanceCurve, k_gain
from .trajectory import OperatingPoint, assign_patterns, build_trajectory, reference_set

__all__ = [
    "SweepConfig",
    "Trace",
    "CompareStats",
    "CancellationReport",
    "run_scenario",
    "extract_phasor",
    "complex_bin",
    "measure_impedance",
    "compare",
    "harmonic_cancellation_check",
    "write_trace_csv",
    "common_period",
]

# probe current below this magnitude cannot support a division
CURRENT_FLOOR = 1e-9

_CONTROL_LAWS = ("pattern", "linear")


@dataclass(frozen=True)
class SweepConfig:
    """Perturbation protocol of a frequency sweep.

    Frequencies sharing a 10 Hz grid with the fundamental keep the
    common period at 0.1 s; the window is measured in common periods so
    it always spans an integer number of fundamental and probe cycles.
    """

    frequencies: tuple[float, ...]
    perturb_amp: float = 538.8877434122992  # 1% of the rated PCC peak
    settle_periods: int = 10  # fundamental periods discarded up front
    window_periods: int = 5  # common periods per measurement window
    frame: str = "alpha_beta"

    def __post_init__(self) -> None:
        freqs = tuple(float(f) for f in self.frequencies)
        object.__setattr__(self, "frequencies", freqs)
        if not freqs or any(f <= 0.0 for f in freqs):
            raise ValueError("frequencies must be positive")
        if len(set(freqs)) != len(freqs):
            raise ValueError("frequencies must be distinct")
        if self.perturb_amp <= 0.0:
            raise ValueError("perturb_amp must be positive")
        if self.settle_periods < 0 or self.window_periods < 1:
            raise ValueError("need settle_periods >= 0 and window_periods >= 1")
        if self.frame not in ("alpha_beta", "dq"):
            raise ValueError("frame must be alpha_beta or dq")


class Trace:
    """Uniformly sampled scenario record.

    Complex arrays hold stationary-frame space vectors; u1 and u2 are
    the per-phase switch positions (or their continuous equivalents) of
    the two converters, shape (n, 3).
    """

    def __init__(self, dt, i_sum, i_diff, v_pcc, u1, u2):
        n = len(i_sum)
        if not (len(i_diff) == len(v_pcc) == len(u1) == len(u2) == n):
            raise ValueError("channels must share one length")
        if dt <= 0.0:
            raise ValueError("sample period must be positive")
        self.dt = float(dt)
        self.i_sum = i_sum
        self.i_diff = i_diff
        self.v_pcc = v_pcc
        self.u1 = u1
        self.u2 = u2

    def __len__(self) -> int:
        return len(self.i_sum)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


def write_trace_csv(trace: Trace, path) -> None:
    """Current and PCC-voltage channels as delimited text."""
    header = (
        "t_s,i_sum_alpha,i_sum_beta,i_diff_alpha,i_diff_beta,"
        "v_pcc_alpha,v_pcc_beta"
    )
    data = np.column_stack(
        [
            trace.times,
            trace.i_sum.real,
            trace.i_sum.imag,
            trace.i_diff.real,
            trace.i_diff.imag,
            trace.v_pcc.real,
            trace.v_pcc.imag,
        ]
    )
    np.savetxt(path, data, fmt="%.9g", delimiter=",", header=header, comments="")


def common_period(f1: float, fp: float) -> float:
    """Shortest interval containing whole cycles of both frequencies."""
    a = Fraction(f1).limit_denominator(10**6)
    b = Fraction(fp).limit_denominator(10**6)
    num = math.gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    g = Fraction(num, a.denominator * b.denominator)
    return float(1 / g)


# ------------------------------------------------------------ simulation --


class _Recorder:
    """Constant-drive segments plus closed-form dense evaluation."""

    def __init__(self):
        self.t = []
        self.i_sum = []
        self.i_diff = []
        self.v_sum_half = []
        self.v_diff = []
        self.u1 = []
        self.u2 = []

    def add(self, t, i_sum, i_diff, v_sum_half, v_diff, u1, u2):
        self.t.append(t)
        self.i_sum.append(i_sum)
        self.i_diff.append(i_diff)
        self.v_sum_half.append(v_sum_half)
        self.v_diff.append(v_diff)
        self.u1.append(tuple(u1))
        self.u2.append(tuple(u2))

    def dense(self, ch_sum, ch_diff, grid, times):
        seg_t = np.array(self.t)
        idx = np.clip(np.searchsorted(seg_t, times, side="right") - 1, 0, None)
        i_sum = _dense_channel(ch_sum, seg_t, self.i_sum, self.v_sum_half, times, idx)
        i_diff = _dense_channel(ch_diff, seg_t, self.i_diff, self.v_diff, times, idx)
        v_pcc = np.zeros(len(times), dtype=complex)
        for w, c in grid.pcc_tones():
            v_pcc += c * np.exp(1j * w * times)
        u1 = np.array(self.u1)[idx]
        u2 = np.array(self.u2)[idx]
        return Trace(times[1] - times[0], i_sum, i_diff, v_pcc, u1, u2)


def _dense_channel(ch, seg_t, seg_i0, seg_u, times, idx):
    # value inside segment k: (i0_k - p_k(t0_k)) decay + p_k(t), with the
    # particular solution p_k of the constant drive u_k plus the tones
    seg_i0 = np.asarray(seg_i0, dtype=complex)
    seg_u = np.asarray(seg_u, dtype=complex)
    part0 = seg_u / ch.R
    part_t = seg_u[idx] / ch.R
    for w, _c, gain in ch.tones:
        part0 = part0 + gain * np.exp(1j * w * seg_t)
        part_t = part_t + gain * np.exp(1j * w * times)
    decay = np.exp(-(ch.R / ch.L) * (times - seg_t[idx]))
    return (seg_i0 - part0)[idx] * decay + part_t


def _channels(grid: GridConfig, params: PlantParams):
    tones = [(w, -c) for w, c in grid.pcc_tones()]
    return (
        RLChannel(params.Rt, params.Lt, tones),
        RLChannel(params.Rs, params.Ls, []),
    )


def _probe_offset(grid: GridConfig, params: PlantParams) -> complex:
    # steady-state sum-channel current carried by the probe tone alone
    pert = grid.perturbation
    if pert is None or pert.amp == 0.0:
        return 0j
    w = 2.0 * math.pi * pert.freq
    c = pert.amp * cmath.exp(1j * pert.phase)
    return -c / complex(params.Rt, w * params.Lt)


def _normalize_patterns(patterns):
    if patterns is None:
        return None
    if isinstance(patterns, SwitchingPattern):
        return patterns, patterns
    pair = tuple(patterns)
    if len(pair) == 1:
        return pair[0], pair[0]
    if len(pair) == 2:
        return pair
    raise ValueError("patterns must be one pattern or a pair")


def _sample_times(duration: float, sample_dt: float) -> np.ndarray:
    n = int(round(duration / sample_dt))
    if n < 2:
        raise ValueError("duration must cover at least two samples")
    return np.arange(n) * sample_dt


def run_scenario(
    op: OperatingPoint,
    patterns,
    controller: ControllerConfig | None,
    params: PlantParams,
    grid: GridConfig,
    duration: float,
    *,
    sample_dt: float = 1e-6,
    control_law: str = "pattern",
    i0_offset: tuple[complex, complex] = (0j, 0j),
) -> Trace:
    """Deterministic closed-loop run of one operating point.

    patterns is a SwitchingPattern, a pair of them, or None for an
    unswitched converter that applies the fundamental reference voltage
    directly.  controller None leaves gate edges at their nominal
    instants.  control_law "linear" replaces the pattern controller with
    the literal sampled linearized law (requires controller, ignores
    patterns' switching: the converter applies the computed voltage).
    i0_offset shifts the initial (sum, diff) currents away from the
    nominal steady state for step-response studies.
    """
    if duration <= 0.0 or sample_dt <= 0.0:
        raise ValueError("duration and sample_dt must be positive")
    if control_law not in _CONTROL_LAWS:
        raise ValueError(f"control_law must be one of {_CONTROL_LAWS}")
    grid_nom = replace(grid, perturbation=None)
    refs = reference_set(
        op.i_sum_ref_dq, op.i_diff_ref_dq, op.vdc, grid_nom, params, op.ref_angle
    )
    if abs(refs.m1 - op.m) > 5e-3:
        raise ValueError(
            f"operating point m={op.m} disagrees with reference m1={refs.m1:.4f}"
        )
    times = _sample_times(duration, sample_dt)
    di = (complex(i0_offset[0]), complex(i0_offset[1]))
    if control_law == "linear":
        if controller is None:
            raise ValueError("the linear law needs a controller configuration")
        return _run_linear(refs, op.vdc, controller, params, grid, duration, times, di)
    pair = _normalize_patterns(patterns)
    if pair is None:
        if controller is not None:
            raise ValueError("an unswitched converter leaves nothing to control")
        return _run_fundamental(refs, op.vdc, params, grid, times, di)
    if controller is not None:
        for pat in pair:
            if pat.p != controller.p:
                raise ValueError(
                    f"pattern p={pat.p} does not match controller p={controller.p}"
                )
    return _run_switched(
        refs, op.vdc, pair, controller, params, grid, duration, times, di
    )


def _initial_levels(traj) -> dict[tuple[int, int], float]:
    last: dict[tuple[int, int], tuple[float, float]] = {}
    for ev in traj.events:
        key = (ev.converter, ev.phase)
        if key not in last or ev.t > last[key][0]:
            last[key] = (ev.t, ev.u_after)
    return {key: ua for key, (_, ua) in last.items()}


def _run_switched(refs, vdc, pair, controller, params, grid, duration, times, di):
    assignment = assign_patterns(refs, vdc, pair[0], pair[1])
    traj = build_trajectory(assignment, grid, params)
    ch_sum, ch_diff = _channels(grid, params)
    half = 0.5 * vdc

    levels = _initial_levels(traj)
    u1 = [levels[(0, ph)] for ph in range(3)]
    u2 = [levels[(1, ph)] for ph in range(3)]

    def drive():
        v1 = clarke(*(half * u for u in u1))
        v2 = clarke(*(half * u for u in u2)) * DELTA_ROTATION
        return 0.5 * (v1 + v2), v1 - v2

    i_sum = traj.i_sum(0.0) + _probe_offset(grid, params) + di[0]
    i_diff = traj.i_diff(0.0) + di[1]
    rec = _Recorder()
    vs_half, vd = drive()
    rec.add(0.0, i_sum, i_diff, vs_half, vd, u1, u2)

    heap: list[tuple[float, int, int, float, float]] = []

    def push(t, conv, phase, du, ua):
        heapq.heappush(heap, (t, conv, phase, du, ua))

    ctl = None
    if controller is not None:
        ctl = Mp3cController(traj, controller, params)
        Td = controller.Td
        for ev in traj.events_between(0.0, Td):
            push(ev.t, ev.converter, ev.phase, ev.du, ev.u_after)
        n_steps = int(math.ceil(duration / Td - 1e-12))
        bounds = [(k * Td, min((k + 1) * Td, duration)) for k in range(n_steps)]
    else:
        for ev in traj.events_between(0.0, duration):
            push(ev.t, ev.converter, ev.phase, ev.du, ev.u_after)
        bounds = [(0.0, duration)]

    t = 0.0
    for tk, t_next in bounds:
        if ctl is not None:
            # sample-then-fire: edges landing exactly on the sampling
            # instant execute after the controller has read the state
            state = PlantState(t=tk, i_sum=i_sum, i_diff=i_diff)
            sched = ctl.step(state, tk, v_pcc=grid.v_pcc(tk))
            for e in sched.events:
                push(e.time, e.converter, e.phase, e.du, e.u_after)
        while heap and heap[0][0] < t_next:
            te, conv, phase, _du, ua = heapq.heappop(heap)
            if te > t:
                i_sum = ch_sum.advance(i_sum, t, te, vs_half)
                i_diff = ch_diff.advance(i_diff, t, te, vd)
                t = te
            (u1 if conv == 0 else u2)[phase] = ua
            vs_half, vd = drive()
            rec.add(t, i_sum, i_diff, vs_half, vd, u1, u2)
        if t_next > t:
            i_sum = ch_sum.advance(i_sum, t, t_next, vs_half)
            i_diff = ch_diff.advance(i_diff, t, t_next, vd)
            t = t_next
    return rec.dense(ch_sum, ch_diff, grid, times)


def _run_fundamental(refs, vdc, params, grid, times, di):
    # the converters apply the rotating reference voltages exactly, so
    # both channels reduce to fixed tone sets and one closed-form segment
    e_ini = cmath.exp(1j * grid.phi_ini)
    w1 = grid.omega1
    sum_tones = [(w1, 0.5 * refs.v_sum_dq * e_ini)]
    for w, c in grid.pcc_tones():
        sum_tones.append((w, -c))
    ch_sum = RLChannel(params.Rt, params.Lt, sum_tones)
    ch_diff = RLChannel(params.Rs, params.Ls, [(w1, refs.v_diff_dq * e_ini)])

    i_sum = ch_sum.particular(0.0, 0j) + di[0]
    i_diff = ch_diff.particular(0.0, 0j) + di[1]
    rec = _Recorder()
    rec.add(0.0, i_sum, i_diff, 0j, 0j, (0.0,) * 3, (0.0,) * 3)
    trace = rec.dense(ch_sum, ch_diff, grid, times)

    # continuous switch-position equivalents of the reference voltages
    half = 0.5 * vdc
    rot = np.exp(1j * (w1 * times + grid.phi_ini))
    v1 = refs.v_conv1_dq * rot
    v2 = refs.v_conv2_dq * rot
    for u, v in ((trace.u1, v1), (trace.u2, v2)):
        u[:, 0] = v.real / half
        u[:, 1] = (v * cmath.exp(-2j * math.pi / 3)).real / half
        u[:, 2] = (v * cmath.exp(2j * math.pi / 3)).real / half
    return trace


def _run_linear(refs, vdc, cfg, params, grid, duration, times, di):
    grid_nom = replace(grid, perturbation=None)
    if abs(cfg.f1 - grid.f1) > 1e-9 * grid.f1:
        raise ValueError("controller horizon disagrees with grid frequency")
    gain = cfg.err_scale * k_gain(cfg.p, grid.f1, params.Lt)
    f_meas = DiscreteFilter(cfg.h_al, cfg.Td)
    f_pcc_al = DiscreteFilter(cfg.h_al, cfg.Td)
    f_pcc_lp = DiscreteFilter(cfg.h_pcc, cfg.Td)
    ch_sum, ch_diff = _channels(grid, params)
    z_ff = complex(params.Rt, grid.omega1 * params.Lt) * refs.i_sum_dq

    i_sum = refs.i_sum_dq * cmath.exp(1j * grid_nom.phi(0.0))
    i_sum += _probe_offset(grid, params) + di[0]
    i_diff = di[1]
    held_fb = 0j
    rec = _Recorder()
    n_steps = int(math.ceil(duration / cfg.Td - 1e-12))
    for k in range(n_steps):
        tk = k * cfg.Td
        t_next = min(tk + cfg.Td, duration)
        rot = cmath.exp(1j * grid_nom.phi(tk))
        # feedback path carries the hold and the implementation delay;
        # both feedforward paths apply within the sampling interval
        fb_next = gain * (refs.i_sum_dq * rot - f_meas.push(i_sum))
        ff_pcc = f_pcc_lp.push(f_pcc_al.push(grid.v_pcc(tk)) / rot) * rot
        v_half = held_fb + z_ff * rot + ff_pcc
        # with v_diff = 0 both line voltages equal v_sum/2
        half = 0.5 * vdc
        u1 = tuple(x / half for x in inverse_clarke(v_half))
        u2 = tuple(x / half for x in inverse_clarke(v_half / DELTA_ROTATION))
        rec.add(tk, i_sum, i_diff, v_half, 0j, u1, u2)
        i_sum = ch_sum.advance(i_sum, tk, t_next, v_half)
        i_diff = ch_diff.advance(i_diff, tk, t_next, 0j)
        held_fb = fb_next
    return rec.dense(ch_sum, ch_diff, grid, times)


# ----------------------------------------------------- phasor extraction --


def _check_window(n: int, dt: float, f: float) -> None:
    cycles = f * n * dt
    if abs(cycles - round(cycles)) > 1e-6 * max(1.0, abs(cycles)):
        raise ValueError(
            f"window of {n} samples is not an integer number of periods at {f} Hz"
        )


def extract_phasor(samples, dt: float, f: float, t0: float = 0.0) -> complex:
    """Single-bin projection (2/N) sum x_k exp(-j 2 pi f t_k).

    Exact amplitude-and-phase phasor of a real tone at a bin frequency
    of the window; the window must span an integer number of periods.
    """
    x = np.asarray(samples)
    _check_window(len(x), dt, f)
    t = t0 + np.arange(len(x)) * dt
    return 2.0 / len(x) * complex(np.sum(x * np.exp(-2j * math.pi * f * t)))


def complex_bin(samples, dt: float, f: float, t0: float = 0.0) -> complex:
    """Signed-frequency Fourier coefficient of a complex space vector."""
    x = np.asarray(samples)
    _check_window(len(x), dt, f)
    t = t0 + np.arange(len(x)) * dt
    return complex(np.mean(x * np.exp(-2j * math.pi * f * t)))


# ------------------------------------------------------------ measurement --


def measure_impedance(
    sweep: SweepConfig,
    op: OperatingPoint,
    patterns,
    controller: ControllerConfig | None,
    params: PlantParams,
    grid: GridConfig,
    *,
    control_law: str = "pattern",
    sample_dt: float = 1e-6,
) -> ImpedanceCurve:
    """Swept-sine impedance seen from the PCC, Z(f) = -V(f)/I_sum(f).

    One independent scenario per frequency, processed in ascending order.
    In the dq frame the probe is placed one fundamental above the
    reported frequency.  Points whose probe response falls below the
    current floor, collides with a fundamental harmonic, or shares no
    reasonable common period with the fundamental are skipped with a
    warning.
    """
    f1 = grid.f1
    samples = []
    for f in sorted(sweep.frequencies):
        fp = f + f1 if sweep.frame == "dq" else f
        ratio = fp / f1
        if abs(ratio - round(ratio)) < 1e-9:
            warnings.warn(
                f"skipping {f} Hz: probe collides with harmonic {round(ratio)} f1"
            )
            continue
        base = common_period(f1, fp)
        window = sweep.window_periods * base
        if window > 10.0:
            warnings.warn(
                f"skipping {f} Hz: no workable common period with f1={f1}"
            )
            continue
        settle = sweep.settle_periods / f1
        probe_grid = replace(
            grid, perturbation=Perturbation(freq=fp, amp=sweep.perturb_amp)
        )
        trace = run_scenario(
            op,
            patterns,
            controller,
            params,
            probe_grid,
            settle + window,
            sample_dt=sample_dt,
            control_law=control_law,
        )
        n0 = int(round(settle / trace.dt))
        n1 = n0 + int(round(window / trace.dt))
        if n1 > len(trace):
            raise ValueError("trace shorter than settle plus window")
        t0 = n0 * trace.dt
        v = complex_bin(trace.v_pcc[n0:n1], trace.dt, fp, t0)
        i = complex_bin(trace.i_sum[n0:n1], trace.dt, fp, t0)
        if abs(i) < CURRENT_FLOOR:
            warnings.warn(
                f"skipping {f} Hz: probe current {abs(i):.3g} A is unmeasurable"
            )
            continue
        samples.append((f, -v / i))
    return ImpedanceCurve(
        samples=tuple(samples), frame=sweep.frame, source="measured"
    )


# ------------------------------------------------------------- comparison --


@dataclass(frozen=True)
class CompareStats:
    """Pointwise and summary deviations of a measured curve from a model."""

    freqs: tuple[float, ...]
    d_re: tuple[float, ...]
    d_im: tuple[float, ...]
    median_abs_re: float
    max_abs_re: float
    median_abs_im: float
    max_abs_im: float
    gain: float | None = None  # normalization, typically k_gain

    @property
    def median_rel(self) -> float:
        if self.gain is None:
            raise ValueError("no normalization gain recorded")
        return self.median_abs_re / self.gain

    @property
    def max_rel(self) -> float:
        if self.gain is None:
            raise ValueError("no normalization gain recorded")
        return self.max_abs_re / self.gain


def compare(
    measured: ImpedanceCurve, model: ImpedanceCurve, gain: float | None = None
) -> CompareStats:
    """Per-point real and imaginary deviations over a shared grid."""
    if measured.frame != model.frame:
        raise ValueError("curves live in different frames")
    if len(measured.samples) != len(model.samples):
        raise ValueError("curves cover different grids")
    freqs, d_re, d_im = [], [], []
    for (fa, za), (fb, zb) in zip(measured.samples, model.samples):
        if abs(fa - fb) > 1e-9 * max(1.0, abs(fb)):
            raise ValueError(f"grid mismatch at {fa} Hz vs {fb} Hz")
        freqs.append(fa)
        d_re.append(za.real - zb.real)
        d_im.append(za.imag - zb.imag)
    abs_re = [abs(x) for x in d_re]
    abs_im = [abs(x) for x in d_im]
    return CompareStats(
        freqs=tuple(freqs),
        d_re=tuple(d_re),
        d_im=tuple(d_im),
        median_abs_re=float(np.median(abs_re)),
        max_abs_re=max(abs_re),
        median_abs_im=float(np.median(abs_im)),
        max_abs_im=max(abs_im),
        gain=gain,
    )


# ---------------------------------------------------- harmonic diagnostics --


@dataclass(frozen=True)
class CancellationReport:
    """Low-order harmonics of the sum current against a single-line base.

    The 5th harmonic rotates against the fundamental and the 7th with
    it, so they are read at -5 f1 and +7 f1.  The baseline doubles
    converter I's line current, which is what two unshifted lines would
    deliver.  Ratios are NaN when the baseline itself is negligible.
    """

    ratio_5: float
    ratio_7: float
    sum_5: float
    sum_7: float
    base_5: float
    base_7: float
    degenerate: bool


def harmonic_cancellation_check(
    trace: Trace, f1: float, settle: float = 0.0
) -> CancellationReport:
    """5th/7th harmonic suppression of i_sum over the trailing window."""
    n0 = int(round(settle / trace.dt))
    total = (len(trace) - n0) * trace.dt
    periods = math.floor(total * f1 + 1e-9)
    if periods < 1:
        raise ValueError("trace too short for one fundamental period")
    n = int(round(periods / f1 / trace.dt))
    sl = slice(n0, n0 + n)
    t0 = n0 * trace.dt
    i_sum = trace.i_sum[sl]
    i_base = trace.i_sum[sl] + trace.i_diff[sl]  # 2 * converter-I current

    def mag(x, f):
        return abs(complex_bin(x, trace.dt, f, t0))

    sum_5, base_5 = mag(i_sum, -5.0 * f1), mag(i_base, -5.0 * f1)
    sum_7, base_7 = mag(i_sum, 7.0 * f1), mag(i_base, 7.0 * f1)
    fund = mag(i_base, f1)
    floor = max(1e-9, 1e-9 * fund)
    degenerate = base_5 < floor and base_7 < floor
    if degenerate:
        ratio_5 = ratio_7 = float("nan")
    else:
        ratio_5 = sum_5 / base_5 if base_5 > floor else 0.0
        ratio_7 = sum_7 / base_7 if base_7 > floor else 0.0
    return CancellationReport(
        ratio_5=ratio_5,
        ratio_7=ratio_7,
        sum_5=sum_5,
        sum_7=sum_7,
        base_5=base_5,
        base_7=base_7,
        degenerate=degenerate,
    )

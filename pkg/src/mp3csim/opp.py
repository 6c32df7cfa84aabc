"""Offline optimized pulse patterns with quarter-wave symmetry.

A pattern with pulse number p holds d = p/2 switching angles per quarter
period, each carrying a signed level step.  Quarter-wave and half-wave
symmetry fix the remaining three quarters, so one phase switches 2p times
per period and each device switches at p*f1/2.

Only odd harmonics survive the symmetry; the per-phase sine coefficients
are

    b_k = (4 / (k*pi)) * sum_i step_i * cos(k * angle_i)

and the distortion objective sums (b_k/k)^2 over the odd, non-triplen
orders from 5 upward, the weighting of inductor current harmonics.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "B1_MAX",
    "ORDER_MARGIN",
    "InfeasibleModulationError",
    "PatternRangeError",
    "SwitchingPattern",
    "OperatingPoint",
    "PatternTable",
    "fundamental_amplitude",
    "harmonic_amplitude",
    "distortion_harmonics",
    "distortion_objective",
    "device_switching_frequency",
    "optimize",
    "build_table",
    "load_pattern",
    "expand_pattern",
    "base_level",
    "save_table",
    "read_table",
]

B1_MAX = 4.0 / math.pi  # attainable fundamental of a two-level step sequence
ORDER_MARGIN = 1e-4  # minimum angle separation enforced by the optimizer [rad]
K_MAX_DEFAULT = 97  # highest harmonic order kept in the distortion objective

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


class InfeasibleModulationError(ValueError):
    """Requested fundamental amplitude outside the attainable range."""

    def __init__(self, m: float, attainable: float):
        super().__init__(
            f"modulation index {m:.6g} infeasible, attainable bound {attainable:.6g}"
        )
        self.attainable = attainable


class PatternRangeError(ValueError):
    """Requested modulation index outside the table range."""


def fundamental_amplitude(angles, steps) -> float:
    """Normalized fundamental b1 of a quarter-wave step sequence."""
    return (4.0 / math.pi) * sum(s * math.cos(a) for a, s in zip(angles, steps))


def harmonic_amplitude(angles, steps, k: int) -> float:
    """Normalized sine coefficient b_k; zero for even k by symmetry."""
    if k < 1:
        raise ValueError("harmonic order must be >= 1")
    if k % 2 == 0:
        return 0.0
    return (4.0 / (k * math.pi)) * sum(s * math.cos(k * a) for a, s in zip(angles, steps))


def distortion_harmonics(k_max: int) -> list[int]:
    """Odd, non-triplen harmonic orders from 5 up to k_max."""
    return [k for k in range(5, k_max + 1, 2) if k % 3 != 0]


def distortion_objective(angles, steps, k_max: int = K_MAX_DEFAULT) -> float:
    """Current-distortion measure: sum of (b_k/k)^2 over distortion orders."""
    return sum(
        (harmonic_amplitude(angles, steps, k) / k) ** 2
        for k in distortion_harmonics(k_max)
    )


def device_switching_frequency(p: int, f1: float) -> float:
    """Per-device switching frequency of a pulse-number-p pattern [Hz]."""
    return 0.5 * p * f1


def _step_quantum(levels: int) -> float:
    if levels < 3 or levels % 2 == 0:
        raise ValueError("levels must be an odd integer >= 3")
    return 2.0 / (levels - 1)


@dataclass(frozen=True)
class SwitchingPattern:
    """One quarter period of a symmetric pulse pattern.

    angles: strictly increasing switching angles in (0, pi/2) [rad]
    steps:  signed level steps in normalized units, multiples of the level
            quantum 2/(levels-1); running levels must stay within [-1, 1]
    """

    angles: tuple[float, ...]
    steps: tuple[float, ...]
    levels: int = 3

    def __post_init__(self) -> None:
        if len(self.angles) != len(self.steps) or not self.angles:
            raise ValueError("angles and steps must be equal-length, non-empty")
        q = _step_quantum(self.levels)
        prev = 0.0
        level = 0.0
        for a, s in zip(self.angles, self.steps):
            if not prev < a < _HALF_PI:
                raise ValueError("angles must be strictly increasing in (0, pi/2)")
            prev = a
            if s == 0.0 or abs(s / q - round(s / q)) > 1e-9:
                raise ValueError(f"step {s} is not a nonzero multiple of {q}")
            level += s
            if abs(level) > 1.0 + 1e-9:
                raise ValueError("running level leaves [-1, 1]")

    @property
    def d(self) -> int:
        return len(self.angles)

    @property
    def p(self) -> int:
        """Pulse number: 2 switching angles per quarter per pulse."""
        return 2 * len(self.angles)

    @property
    def b1(self) -> float:
        return fundamental_amplitude(self.angles, self.steps)

    def harmonic(self, k: int) -> float:
        return harmonic_amplitude(self.angles, self.steps, k)

    def distortion(self, k_max: int = K_MAX_DEFAULT) -> float:
        return distortion_objective(self.angles, self.steps, k_max)


@dataclass(frozen=True)
class OperatingPoint:
    """Converter operating point used to instantiate a scenario."""

    m: float  # modulation index per converter
    vdc: float  # dc-link voltage, primary referred [V]
    i_sum_ref_dq: complex = 0j  # sum-current reference, dq [A]
    i_diff_ref_dq: complex = 0j  # difference-current reference, dq [A]
    ref_angle: float = 0.0  # extra rotation of the whole reference set [rad]

    def __post_init__(self) -> None:
        if not 0.0 < self.m <= B1_MAX:
            raise ValueError(f"m must lie in (0, {B1_MAX:.6g}]")
        if self.vdc <= 0.0:
            raise ValueError("vdc must be positive")


def base_level(angles, steps, theta: float) -> float:
    """Right-continuous level of the symmetric base waveform at any angle."""
    th = theta % _TWO_PI
    if th >= math.pi:
        return -base_level(angles, steps, th - math.pi)
    if th < _HALF_PI:
        return sum(s for a, s in zip(angles, steps) if a <= th)
    return sum(s for a, s in zip(angles, steps) if a < math.pi - th)


def expand_pattern(angles, steps, levels: int = 3, phase_shift: float = 0.0):
    """Per-phase switching events of the full three-phase pattern.

    Returns a list of (theta, phase, du, u_after) sorted by angle over one
    period [0, 2pi) of the pattern angle.  Phase 0 reproduces the base
    waveform advanced by phase_shift; phases 1 and 2 lag by 2pi/3 and
    4pi/3.  Coincident events of one phase merge; null merges drop.
    """
    q = _step_quantum(levels)
    quads = []
    for a, s in zip(angles, steps):
        quads += [(a, s), (math.pi - a, -s), (math.pi + a, -s), (_TWO_PI - a, s)]
    events = []
    for phase in range(3):
        shift = phase_shift - phase * _TWO_PI / 3.0
        shifted = sorted(((theta - shift) % _TWO_PI, s) for theta, s in quads)
        merged: list[list[float]] = []
        for th, s in shifted:
            if merged and th - merged[-1][0] < 1e-9:
                merged[-1][1] += s
            else:
                merged.append([th, s])
        if len(merged) > 1 and merged[0][0] + _TWO_PI - merged[-1][0] < 1e-9:
            merged[0][1] += merged[-1][1]
            merged.pop()
        merged = [e for e in merged if e[1] != 0.0]
        # half-wave symmetry makes the mean level exactly zero; that pins
        # the absolute level without consulting waveform boundaries
        cums, c = [], 0.0
        for _, du in merged:
            c += du
            cums.append(c)
        dwell_sum = 0.0
        for i, (th, _) in enumerate(merged):
            th_next = merged[i + 1][0] if i + 1 < len(merged) else merged[0][0] + _TWO_PI
            dwell_sum += cums[i] * (th_next - th)
        base = -dwell_sum / _TWO_PI
        for (th, du), cum in zip(merged, cums):
            level = q * round((base + cum) / q)
            events.append((th, phase, du, level))
    events.sort()
    return events


def _lattice_starts(d: int, margin: float) -> list[np.ndarray]:
    starts = []
    for spread in (0.35, 0.6, 0.85, 1.0):
        hi = margin + (_HALF_PI - 2.0 * margin) * spread
        starts.append(np.linspace(margin + 0.3 * (hi - margin) / d, hi, d))
    # chebyshev-like clustering toward both ends
    k = np.arange(1, d + 1)
    starts.append(_HALF_PI * 0.5 * (1.0 - np.cos(math.pi * (k - 0.5) / d)))
    return [np.clip(np.sort(x), margin, _HALF_PI - margin) for x in starts]


def _polish_fundamental(x: np.ndarray, steps: np.ndarray, m: float) -> np.ndarray:
    """Newton projection onto b1 = m along the constraint gradient."""
    for _ in range(8):
        r = (4.0 / math.pi) * float(np.dot(steps, np.cos(x))) - m
        if abs(r) < 1e-13:
            break
        g = -(4.0 / math.pi) * steps * np.sin(x)
        x = x - g * (r / float(np.dot(g, g)))
    return x


def _solve_angles(
    x0: np.ndarray,
    steps: np.ndarray,
    m: float,
    k_orders: np.ndarray,
    margin: float,
):
    d = len(x0)
    k = k_orders[:, None]
    scale = 16.0 / math.pi**2

    def objective(x):
        c = np.cos(k * x[None, :]) @ steps
        return scale * float(np.sum(c * c / k_orders**4))

    def objective_grad(x):
        c = np.cos(k * x[None, :]) @ steps
        return -2.0 * scale * (c / k_orders**3) @ np.sin(k * x[None, :]) * steps

    def b1_res(x):
        return (4.0 / math.pi) * float(np.dot(steps, np.cos(x))) - m

    def b1_grad(x):
        return -(4.0 / math.pi) * steps * np.sin(x)

    constraints = [{"type": "eq", "fun": b1_res, "jac": b1_grad}]
    if d > 1:
        a_ord = np.zeros((d - 1, d))
        for i in range(d - 1):
            a_ord[i, i] = -1.0
            a_ord[i, i + 1] = 1.0
        constraints.append(
            {
                "type": "ineq",
                "fun": lambda x: a_ord @ x - margin,
                "jac": lambda x: a_ord,
            }
        )
    res = minimize(
        objective,
        x0,
        jac=objective_grad,
        method="SLSQP",
        bounds=[(margin, _HALF_PI - margin)] * d,
        constraints=constraints,
        options={"ftol": 1e-14, "maxiter": 500},
    )
    x = _polish_fundamental(np.asarray(res.x, dtype=float), steps, m)
    ok = (
        bool(np.all(np.diff(x) >= 0.5 * margin))
        and bool(np.all(x >= 0.25 * margin))
        and bool(np.all(x <= _HALF_PI - 0.25 * margin))
        and abs(b1_res(x)) < 1e-9
    )
    return ok, x, objective(x)


def _staircase_seed(d: int, m: float, levels: int):
    """Step signs and seed angles from the nearest-level staircase of m*sin."""
    q = _step_quantum(levels)
    top_level = (levels - 1) // 2
    rises = []
    j = 1
    while j <= top_level and (j - 0.5) * q < m:
        rises.append(math.asin(min(1.0, (j - 0.5) * q / m)))
        j += 1
    if not rises:
        rises = [math.asin(min(1.0, 0.5))]
    r = len(rises)
    if (d - r) % 2 == 1:
        r -= 1
        rises = rises[:-1]
    if r < 1 or d < r:
        raise ValueError(f"cannot seed {d} transitions for {levels} levels at m={m}")
    n_pairs = (d - r) // 2
    # dwell intervals between rises (and up to pi/2) receive dither pairs,
    # longest intervals first
    bounds = [0.0] + rises + [_HALF_PI]
    dwell = [(bounds[i + 1] - bounds[i], i) for i in range(1, r + 1)]
    alloc = [0] * (r + 1)
    order = sorted(dwell, reverse=True)
    for n in range(n_pairs):
        _, idx = order[n % len(order)]
        alloc[idx] += 1
    entries = []  # (angle, step)
    for i, a in enumerate(rises):
        entries.append((a, q))
        lo, hi = a, bounds[i + 2]
        npair = alloc[i + 1]
        level = (i + 1) * q
        up = level + q <= 1.0 + 1e-12
        for n in range(npair):
            c = lo + (hi - lo) * (n + 1) / (npair + 1)
            w = 0.25 * (hi - lo) / (npair + 1)
            s0 = q if up else -q
            entries.append((c - w, s0))
            entries.append((c + w, -s0))
    entries.sort()
    angles = np.array([a for a, _ in entries])
    steps = np.array([s for _, s in entries])
    return steps, angles


def _candidate_solutions(
    d: int,
    m: float,
    levels: int,
    k_max: int,
    margin: float,
    seed: int,
    warm,
):
    if levels == 3:
        steps = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(d)])
        seeds = _lattice_starts(d, margin)
    else:
        steps, stair = _staircase_seed(d, m, levels)
        seeds = [stair]
    if warm is not None:
        seeds = [np.asarray(warm, dtype=float)] + seeds
    rng = np.random.default_rng(seed)
    base = seeds[-1]
    for _ in range(4):
        jit = np.sort(base + rng.normal(0.0, 0.08, size=d))
        seeds.append(np.clip(jit, margin, _HALF_PI - margin))
    k_orders = np.array(distortion_harmonics(k_max), dtype=float)
    found = []
    for x0 in seeds:
        ok, x, j = _solve_angles(np.sort(x0), steps, m, k_orders, margin)
        if not ok:
            continue
        for _jx, xs, _ in found:
            if np.max(np.abs(xs - x)) < 1e-3:
                break
        else:
            found.append((j, x, steps))
    found.sort(key=lambda item: (item[0], tuple(item[1])))
    return found


def optimize(
    d: int,
    m: float,
    levels: int = 3,
    k_max: int = K_MAX_DEFAULT,
    margin: float = ORDER_MARGIN,
    rank: int = 0,
    seed: int = 7,
    warm=None,
) -> SwitchingPattern:
    """Minimum-distortion switching angles at fundamental amplitude m.

    Deterministic multi-start local search; rank selects among the distinct
    local optima ordered by objective value (rank 0 is the best found).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if m <= 0.0 or m > B1_MAX * math.cos(2.0 * margin):
        raise InfeasibleModulationError(m, B1_MAX)
    found = _candidate_solutions(d, m, levels, k_max, margin, seed, warm)
    if not found:
        raise InfeasibleModulationError(m, B1_MAX)
    if rank >= len(found):
        raise ValueError(f"only {len(found)} distinct optima found, rank {rank} unavailable")
    _, x, steps = found[rank]
    return SwitchingPattern(tuple(float(a) for a in x), tuple(float(s) for s in steps), levels)


@dataclass
class PatternTable:
    """Angle table over a modulation-index grid, one branch of optima."""

    levels: int
    d: int
    rows: list[tuple[float, tuple[float, ...], tuple[float, ...]]] = field(
        default_factory=list
    )

    @property
    def p(self) -> int:
        return 2 * self.d

    @property
    def m_range(self) -> tuple[float, float]:
        return self.rows[0][0], self.rows[-1][0]

    def __post_init__(self) -> None:
        ms = [r[0] for r in self.rows]
        if ms != sorted(ms) or len(set(ms)) != len(ms):
            raise ValueError("table rows must have strictly increasing m")
        for m, angles, steps in self.rows:
            if len(angles) != self.d or len(steps) != self.d:
                raise ValueError("row width does not match d")


def build_table(
    d: int,
    m_grid,
    levels: int = 3,
    k_max: int = K_MAX_DEFAULT,
    rank: int = 0,
    seed: int = 7,
) -> PatternTable:
    """Optimize one branch of patterns over an ascending m grid.

    The first row picks the rank-th distinct optimum; later rows are
    warm-started from their predecessor so the whole table follows one
    branch and interpolates smoothly.
    """
    rows = []
    warm = None
    for m in sorted(m_grid):
        if warm is None:
            pat = optimize(d, m, levels=levels, k_max=k_max, rank=rank, seed=seed)
        else:
            found = _candidate_solutions(d, m, levels, k_max, ORDER_MARGIN, seed, warm)
            if not found:
                raise InfeasibleModulationError(m, B1_MAX)
            wa = np.asarray(warm)
            _, x, steps = min(found, key=lambda it: float(np.max(np.abs(it[1] - wa))))
            pat = SwitchingPattern(
                tuple(float(a) for a in x),
                tuple(float(s) for s in steps),
                levels,
            )
        warm = pat.angles
        rows.append((float(m), pat.angles, pat.steps))
    return PatternTable(levels=levels, d=d, rows=rows)


def load_pattern(table: PatternTable, m: float) -> SwitchingPattern:
    """Pattern at modulation index m, interpolating angles between rows."""
    rows = table.rows
    lo_m, hi_m = table.m_range
    if m < lo_m - 1e-12 or m > hi_m + 1e-12:
        raise PatternRangeError(
            f"m={m:.6g} outside table range [{lo_m:.6g}, {hi_m:.6g}]"
        )
    for row_m, angles, steps in rows:
        if abs(row_m - m) <= 1e-12:
            return SwitchingPattern(angles, steps, table.levels)
    for (m0, a0, s0), (m1, a1, s1) in zip(rows, rows[1:]):
        if m0 < m < m1:
            if s0 != s1:
                raise ValueError(
                    "bracketing rows carry different step sequences; "
                    "table mixes branches"
                )
            w = (m - m0) / (m1 - m0)
            angles = tuple(x0 + w * (x1 - x0) for x0, x1 in zip(a0, a1))
            return SwitchingPattern(angles, s0, table.levels)
    raise PatternRangeError(f"m={m:.6g} not bracketed by table rows")


def _format_step(s: float, levels: int) -> str:
    if levels == 3:
        return f"{int(round(s)):+d}"
    return f"{s:.9g}"


def save_table(table: PatternTable, path) -> None:
    """Write a pattern table in the plain text exchange format."""
    lines = [f"p={table.p} levels={table.levels} d={table.d}"]
    for m, angles, steps in table.rows:
        lines.append(
            ";".join(
                [
                    f"{m:.9g}",
                    ",".join(f"{a:.9g}" for a in angles),
                    ",".join(_format_step(s, table.levels) for s in steps),
                ]
            )
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


_HEADER_RE = re.compile(r"^p=(\d+) levels=(\d+) d=(\d+)$")


def read_table(path) -> PatternTable:
    """Read a pattern table written by save_table."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty pattern table")
    match = _HEADER_RE.match(lines[0])
    if not match:
        raise ValueError(f"{path}: malformed header {lines[0]!r}")
    p, levels, d = (int(g) for g in match.groups())
    if p != 2 * d:
        raise ValueError(f"{path}: header violates p = 2d")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(";")
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed row {ln!r}")
        m = float(parts[0])
        angles = tuple(float(x) for x in parts[1].split(","))
        steps = tuple(float(x) for x in parts[2].split(","))
        rows.append((m, angles, steps))
    return PatternTable(levels=levels, d=d, rows=rows)

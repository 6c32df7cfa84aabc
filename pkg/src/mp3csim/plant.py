"""Continuous-time model of the dual-line grid connection.

Two identical converter lines feed one stiff point of common coupling
through a three-winding transformer.  In the stationary frame the current
dynamics decouple into a sum and a difference channel:

    L_t * di_sum/dt  = v_sum / 2 - v_pcc - R_t * i_sum
    L_s * di_diff/dt = v_diff      - R_s * i_diff

with R_t = R_p + R_s / 2 and L_t = L_p + L_s / 2.  Between switching events
every drive term is either constant or a single complex tone, so states are
advanced with the exact exponential response instead of a numeric ODE
solver.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = [
    "RATED_F1",
    "RATED_VLL",
    "RATED_S",
    "V_PCC_PEAK",
    "I_RATED_PEAK",
    "PlantParams",
    "Perturbation",
    "GridConfig",
    "PlantState",
    "RLChannel",
    "converter_voltage",
    "advance",
    "steady_state_phasor",
]

# Rated values of the 14 MVA, 66 kV / 3.1 kV connection.
RATED_F1 = 50.0  # fundamental frequency [Hz]
RATED_VLL = 66e3  # primary line-to-line voltage, rms [V]
RATED_S = 14e6  # transformer rating [VA]
V_PCC_PEAK = RATED_VLL * math.sqrt(2.0 / 3.0)  # phase peak [V]
I_RATED_PEAK = math.sqrt(2.0) * RATED_S / (math.sqrt(3.0) * RATED_VLL)  # [A]


@dataclass(frozen=True)
class PlantParams:
    """Winding constants of one line, referred to the primary side.

    Only the sum-channel aggregates R_t and L_t are published for the
    target connection; the split between primary and secondary keeps the
    aggregates R_t = 3.1 ohm and L_t = 178 mH.
    """

    Rp: float = 1.55  # primary winding resistance [ohm]
    Lp: float = 0.089  # primary winding inductance [H]
    Rs: float = 3.1  # secondary winding resistance [ohm]
    Ls: float = 0.178  # secondary winding inductance [H]

    def __post_init__(self) -> None:
        for name in ("Rp", "Lp", "Rs", "Ls"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def Rt(self) -> float:
        """Sum-channel resistance R_p + R_s / 2 [ohm]."""
        return self.Rp + 0.5 * self.Rs

    @property
    def Lt(self) -> float:
        """Sum-channel inductance L_p + L_s / 2 [H]."""
        return self.Lp + 0.5 * self.Ls


@dataclass(frozen=True)
class Perturbation:
    """Single probe tone added to the PCC voltage."""

    freq: float  # probe frequency [Hz]
    amp: float  # phase-peak amplitude [V]
    phase: float = 0.0  # initial phase [rad]


@dataclass(frozen=True)
class GridConfig:
    """Stiff PCC voltage: a fundamental plus an optional probe tone."""

    f1: float = RATED_F1
    v_pcc_peak: float = V_PCC_PEAK
    phi_ini: float = 0.0
    perturbation: Perturbation | None = None

    def __post_init__(self) -> None:
        if self.f1 <= 0.0:
            raise ValueError("f1 must be positive")
        if self.v_pcc_peak < 0.0:
            raise ValueError("v_pcc_peak must be non-negative")

    @property
    def omega1(self) -> float:
        return 2.0 * math.pi * self.f1

    def phi(self, t: float) -> float:
        """Fundamental angle omega1 * t + phi_ini."""
        return self.omega1 * t + self.phi_ini

    def pcc_tones(self) -> list[tuple[float, complex]]:
        """(angular frequency, complex amplitude) pairs making up v_pcc."""
        tones = [(self.omega1, self.v_pcc_peak * cmath.exp(1j * self.phi_ini))]
        pert = self.perturbation
        if pert is not None and pert.amp != 0.0:
            tones.append(
                (2.0 * math.pi * pert.freq, pert.amp * cmath.exp(1j * pert.phase))
            )
        return tones

    def v_pcc(self, t: float) -> complex:
        """Stationary-frame PCC voltage vector at time t."""
        return sum(c * cmath.exp(1j * w * t) for w, c in self.pcc_tones())


@dataclass
class PlantState:
    """Stationary-frame current state of both channels."""

    t: float = 0.0
    i_sum: complex = 0j
    i_diff: complex = 0j


class RLChannel:
    """Exact integrator for L di/dt = u(t) - R i.

    The drive u(t) is a piecewise-constant term plus a fixed set of complex
    tones c * exp(j w t).  The constant may change between calls; the tones
    are fixed at construction so their particular-solution gains are
    precomputed.
    """

    def __init__(self, R: float, L: float, tones: list[tuple[float, complex]]):
        if R <= 0.0 or L <= 0.0:
            raise ValueError("R and L must be positive")
        self.R = R
        self.L = L
        self.tones = [(w, c, c / complex(R, w * L)) for w, c in tones]

    def particular(self, t: float, u_const: complex) -> complex:
        """Particular solution at time t for the given constant drive."""
        p = u_const / self.R
        for w, _c, g in self.tones:
            p += g * cmath.exp(1j * w * t)
        return p

    def advance(self, i0: complex, t0: float, t1: float, u_const: complex) -> complex:
        """State at t1 given state i0 at t0, holding u_const over [t0, t1]."""
        p0 = self.particular(t0, u_const)
        p1 = self.particular(t1, u_const)
        decay = math.exp(-(t1 - t0) * self.R / self.L)
        return (i0 - p0) * decay + p1


def converter_voltage(
    u: tuple[float, float, float], vdc: float
) -> tuple[float, float, float]:
    """Phase voltages of one converter from normalized switch positions.

    Switch positions are normalized to [-1, 1]; a three-level bridge uses
    {-1, 0, +1} and a higher level count uses the intermediate fractions.
    """
    for x in u:
        if not -1.0 <= x <= 1.0:
            raise ValueError(f"switch position {x} outside [-1, 1]")
    half = 0.5 * vdc
    return half * u[0], half * u[1], half * u[2]


def advance(
    state: PlantState,
    v_sum: complex,
    v_diff: complex,
    grid: GridConfig,
    params: PlantParams,
    dt: float,
) -> PlantState:
    """Exact state update with converter voltages held constant over dt."""
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    sum_ch = RLChannel(
        params.Rt, params.Lt, [(w, -c) for w, c in grid.pcc_tones()]
    )
    diff_ch = RLChannel(params.Rs, params.Ls, [])
    t1 = state.t + dt
    i_sum = sum_ch.advance(state.i_sum, state.t, t1, 0.5 * v_sum)
    i_diff = diff_ch.advance(state.i_diff, state.t, t1, v_diff)
    return PlantState(t=t1, i_sum=i_sum, i_diff=i_diff)


def steady_state_phasor(
    v_sum_1: complex, grid: GridConfig, params: PlantParams
) -> complex:
    """Fundamental sum-current phasor for a fundamental sum voltage.

    Both phasors are expressed in the dq frame aligned with the PCC
    voltage, where v_pcc is the real number v_pcc_peak.
    """
    w1 = grid.omega1
    return (0.5 * v_sum_1 - grid.v_pcc_peak) / complex(params.Rt, w1 * params.Lt)

"""Linearized converter model: controller gain, hold/delay blocks, impedance.

The pattern controller behaves, to first order, like a proportional
current controller of gain K = (f1*p/2) * Lt * ln 9: a first-order
tracking loop whose 10-90% rise time equals the controller horizon
2/(f1*p).  Composed with one sampling delay, a zero-order hold, the
anti-aliasing filter on the measured current, and the low-pass PCC
feedforward (active around the fundamental, hence evaluated at s - j*w1),
the converter presents the effective impedance

    Z(s) = (K(s)*H_al(s) + Rt + s*Lt) / (1 - H_pcc(s - j*w1)*H_al(s))

at its terminals.  The real part of Z decides passivity; it crosses zero
in the kilohertz range and the crossing location is the analysis target.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = [
    "LN9",
    "TransferPoint",
    "ImpedanceCurve",
    "SingularityError",
    "k_gain",
    "f_zoh",
    "f_delay",
    "controller_tf",
    "filter_tf",
    "z_conv",
    "resistance_dq",
    "find_zero_crossing",
    "model_curve",
    "write_curve_csv",
    "read_curve_csv",
]

LN9 = math.log(9.0)  # rise-time factor of a first-order step response

_FRAMES = ("alpha_beta", "dq")
_SOURCES = ("model", "measured")


class SingularityError(ValueError):
    """Impedance evaluated too close to a denominator zero."""


@dataclass(frozen=True)
class TransferPoint:
    """One evaluation of a transfer block."""

    s: complex
    value: complex


@dataclass(frozen=True)
class ImpedanceCurve:
    """Ordered impedance samples in one frame from one source."""

    samples: tuple[tuple[float, complex], ...]
    frame: str
    source: str

    def __post_init__(self) -> None:
        if self.frame not in _FRAMES:
            raise ValueError(f"frame must be one of {_FRAMES}")
        if self.source not in _SOURCES:
            raise ValueError(f"source must be one of {_SOURCES}")
        freqs = [f for f, _ in self.samples]
        if freqs != sorted(freqs) or len(set(freqs)) != len(freqs):
            raise ValueError("sample frequencies must be strictly increasing")
        if any(not (math.isfinite(z.real) and math.isfinite(z.imag)) for _, z in self.samples):
            raise ValueError("impedance samples must be finite")

    @property
    def freqs(self) -> tuple[float, ...]:
        return tuple(f for f, _ in self.samples)


def k_gain(p: int, f1: float, Lt: float) -> float:
    """Equivalent proportional gain of the pattern controller [ohm]."""
    if p < 2 or f1 <= 0.0 or Lt <= 0.0:
        raise ValueError("need p >= 2, f1 > 0, Lt > 0")
    return 0.5 * f1 * p * Lt * LN9


def f_zoh(s: complex, Td: float) -> complex:
    """Zero-order hold (1 - e^(-s*Td)) / (s*Td); 1 at s = 0."""
    x = s * Td
    if abs(x) < 1e-8:
        return 1.0 - 0.5 * x  # series limit around the removable pole
    return (1.0 - cmath.exp(-x)) / x


def f_delay(s: complex, Td: float) -> complex:
    """One implementation period of computational delay e^(-s*Td)."""
    return cmath.exp(-s * Td)


def controller_tf(s: complex, p: int, f1: float, Lt: float, Td: float) -> complex:
    """Controller block K * F_zoh * F_delay."""
    return k_gain(p, f1, Lt) * f_zoh(s, Td) * f_delay(s, Td)


def filter_tf(cfg, s: complex) -> complex:
    """Continuous low-pass response of a FilterConfig-shaped object.

    Order 1: wc/(s+wc).  Order 2: Butterworth wc^2/(s^2+sqrt2*wc*s+wc^2).
    """
    wc = 2.0 * math.pi * cfg.cutoff
    if cfg.order == 1:
        return wc / (s + wc)
    if cfg.order == 2:
        return wc * wc / (s * s + math.sqrt(2.0) * wc * s + wc * wc)
    raise ValueError("filter order must be 1 or 2")


def _f1_of(config) -> float:
    # horizon = 2/(f1*p) pins the fundamental inside the controller config
    return 2.0 / (config.horizon * config.p)


def z_conv(s: complex, params, config) -> complex:
    """Effective converter impedance at one complex frequency [ohm]."""
    f1 = _f1_of(config)
    k = config.err_scale * k_gain(config.p, f1, params.Lt)
    h_al = filter_tf(config.h_al, s)
    numerator = k * f_zoh(s, config.Td) * f_delay(s, config.Td) * h_al
    numerator += params.Rt + s * params.Lt
    w1 = 2.0 * math.pi * f1
    den = 1.0 - filter_tf(config.h_pcc, s - 1j * w1) * h_al
    if abs(den) < 1e-9:
        raise SingularityError(f"denominator {abs(den):.3g} at s={s:.6g}")
    return numerator / den


def resistance_dq(omega: float, params, config) -> float:
    """Real part of the dq-frame impedance: Re Z evaluated w1 higher."""
    w1 = 2.0 * math.pi * _f1_of(config)
    return z_conv(1j * (omega + w1), params, config).real


def find_zero_crossing(
    params, config, f_lo: float, f_hi: float
) -> float | None:
    """Zero of Re Z(j*2pi*f) on [f_lo, f_hi] to 1 Hz, None if no sign change."""

    def re_z(f: float) -> float:
        return z_conv(2j * math.pi * f, params, config).real

    lo, hi = f_lo, f_hi
    r_lo, r_hi = re_z(lo), re_z(hi)
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if r_lo * r_hi > 0.0:
        return None
    while hi - lo > 1.0:
        mid = 0.5 * (lo + hi)
        r_mid = re_z(mid)
        if r_mid == 0.0:
            return mid
        if r_lo * r_mid < 0.0:
            hi = mid
        else:
            lo, r_lo = mid, r_mid
    return 0.5 * (lo + hi)


def model_curve(freqs, params, config, frame: str = "alpha_beta") -> ImpedanceCurve:
    """Model impedance over a frequency grid [Hz].

    In the dq frame the impedance at frequency f is the stationary-frame
    value shifted up by the fundamental.
    """
    w1 = 2.0 * math.pi * _f1_of(config)
    shift = w1 if frame == "dq" else 0.0
    samples = tuple(
        (float(f), z_conv(1j * (2.0 * math.pi * f + shift), params, config))
        for f in freqs
    )
    return ImpedanceCurve(samples=samples, frame=frame, source="model")


_CSV_HEADER = "frequency_hz,re_z_ohm,im_z_ohm,frame,source"


def write_curve_csv(curve: ImpedanceCurve, path) -> None:
    lines = [_CSV_HEADER]
    for f, z in curve.samples:
        lines.append(
            f"{f:.9g},{z.real:.9g},{z.imag:.9g},{curve.frame},{curve.source}"
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve_csv(path) -> ImpedanceCurve:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != _CSV_HEADER:
        raise ValueError(f"{path}: missing impedance CSV header")
    samples = []
    frames, sources = set(), set()
    for ln in lines[1:]:
        f, re, im, frame, source = ln.split(",")
        samples.append((float(f), complex(float(re), float(im))))
        frames.add(frame)
        sources.add(source)
    if len(frames) != 1 or len(sources) != 1:
        raise ValueError(f"{path}: mixed frames or sources in one curve")
    return ImpedanceCurve(
        samples=tuple(samples), frame=frames.pop(), source=sources.pop()
    )

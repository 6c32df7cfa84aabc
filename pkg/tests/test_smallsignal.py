"""Tests for the linearized impedance model.

The impedance formula is cross-checked by an independent re-derivation
of the block composition written in plain cmath, and the frozen spot
values below were computed from that oracle.
"""

import cmath
import math

import pytest

from mp3csim.mp3c import ControllerConfig, FilterConfig
from mp3csim.plant import PlantParams
from mp3csim.smallsignal import (
    ImpedanceCurve,
    SingularityError,
    f_delay,
    f_zoh,
    filter_tf,
    find_zero_crossing,
    k_gain,
    model_curve,
    read_curve_csv,
    resistance_dq,
    write_curve_csv,
    z_conv,
)

PARAMS = PlantParams()
CFG14 = ControllerConfig.for_pulse_number(14, 50.0)


class DuckConfig:
    """Bare config stand-in so the gain path can be switched off."""

    def __init__(self, err_scale=0.0, h_pcc=FilterConfig(1, 1e-9)):
        self.Td = 25e-6
        self.p = 14
        self.horizon = 2.0 / (50.0 * 14)
        self.err_scale = err_scale
        self.h_al = FilterConfig(2, 15e3)
        self.h_pcc = h_pcc


def oracle_z(s, params, cfg):
    # independent transcription of the block composition
    f1 = 2.0 / (cfg.horizon * cfg.p)
    w1 = 2.0 * math.pi * f1
    k = cfg.err_scale * 0.5 * f1 * cfg.p * params.Lt * math.log(9.0)

    def lp(fc, order, sv):
        wc = 2.0 * math.pi * fc
        if order == 1:
            return wc / (sv + wc)
        return wc * wc / (sv * sv + math.sqrt(2.0) * wc * sv + wc * wc)

    x = s * cfg.Td
    zoh = 1.0 if x == 0 else (1.0 - cmath.exp(-x)) / x
    h_al = lp(cfg.h_al.cutoff, cfg.h_al.order, s)
    num = k * zoh * cmath.exp(-x) * h_al + params.Rt + s * params.Lt
    den = 1.0 - lp(cfg.h_pcc.cutoff, cfg.h_pcc.order, s - 1j * w1) * h_al
    return num / den


# --- controller gain -------------------------------------------------------


def test_gain_values_for_studied_pulse_numbers():
    assert k_gain(14, 50.0, 0.178) == pytest.approx(136.9, abs=0.1)
    assert k_gain(22, 50.0, 0.178) == pytest.approx(215.1, abs=0.1)
    assert k_gain(56, 50.0, 0.178) == pytest.approx(547.6, abs=0.1)


def test_gain_scales_linearly_in_each_factor():
    base = k_gain(14, 50.0, 0.178)
    assert k_gain(28, 50.0, 0.178) == pytest.approx(2 * base, rel=1e-12)
    assert k_gain(14, 100.0, 0.178) == pytest.approx(2 * base, rel=1e-12)
    assert k_gain(14, 50.0, 0.356) == pytest.approx(2 * base, rel=1e-12)


def test_gain_rejects_bad_arguments():
    with pytest.raises(ValueError):
        k_gain(1, 50.0, 0.178)
    with pytest.raises(ValueError):
        k_gain(14, 0.0, 0.178)
    with pytest.raises(ValueError):
        k_gain(14, 50.0, -1.0)


# --- hold, delay, and filter blocks ----------------------------------------


def test_zoh_is_unity_at_dc_and_nulls_at_sampling_harmonics():
    assert f_zoh(0j, 25e-6) == pytest.approx(1.0)
    null = f_zoh(2j * math.pi / 25e-6, 25e-6)
    assert abs(null) < 1e-12
    # series branch agrees with the direct formula just above the switch
    s = 2e-8j / 25e-6
    direct = (1.0 - cmath.exp(-s * 25e-6)) / (s * 25e-6)
    assert f_zoh(s, 25e-6) == pytest.approx(direct, rel=1e-9)


def test_delay_has_unit_magnitude_and_linear_phase():
    s = 2j * math.pi * 1000.0
    assert abs(f_delay(s, 25e-6)) == pytest.approx(1.0, rel=1e-12)
    assert cmath.phase(f_delay(s, 25e-6)) == pytest.approx(
        -2.0 * math.pi * 1000.0 * 25e-6
    )


def test_filter_responses_at_dc_and_cutoff():
    one = FilterConfig(1, 200.0)
    two = FilterConfig(2, 200.0)
    wc = 2.0 * math.pi * 200.0
    assert filter_tf(one, 0j) == pytest.approx(1.0)
    assert filter_tf(two, 0j) == pytest.approx(1.0)
    assert abs(filter_tf(one, 1j * wc)) == pytest.approx(1 / math.sqrt(2))
    assert abs(filter_tf(two, 1j * wc)) == pytest.approx(1 / math.sqrt(2))
    assert cmath.phase(filter_tf(one, 1j * wc)) == pytest.approx(-math.pi / 4)
    assert cmath.phase(filter_tf(two, 1j * wc)) == pytest.approx(-math.pi / 2)


def test_blocks_obey_conjugate_symmetry():
    s = complex(-300.0, 2.0 * math.pi * 777.0)
    for fn in (
        lambda sv: f_zoh(sv, 25e-6),
        lambda sv: f_delay(sv, 25e-6),
        lambda sv: filter_tf(FilterConfig(2, 15e3), sv),
    ):
        assert fn(s.conjugate()) == pytest.approx(fn(s).conjugate(), rel=1e-12)


# --- impedance -------------------------------------------------------------


def test_impedance_with_gain_off_reduces_to_passive_branch():
    cfg = DuckConfig()
    for f in (100.0, 1000.0, 5000.0):
        w = 2.0 * math.pi * f
        z = z_conv(1j * w, PARAMS, cfg)
        assert z == pytest.approx(PARAMS.Rt + 1j * w * PARAMS.Lt, rel=1e-8)


def test_impedance_dc_value():
    z0 = z_conv(0j, PARAMS, CFG14)
    # K + Rt spun by the feedforward denominator (1 - j)/2 at dc
    assert z0.real == pytest.approx(139.98709116804648, rel=1e-12)
    assert z0.imag == pytest.approx(z0.real, rel=1e-12)
    assert z0.real == pytest.approx(140.0, abs=0.05)


def test_impedance_frozen_value_at_1khz():
    z = z_conv(2j * math.pi * 1000.0, PARAMS, CFG14)
    assert z == pytest.approx(187.8144945363405 + 1061.8936922393284j, rel=1e-12)


def test_impedance_matches_independent_composition():
    import random

    rng = random.Random(42)
    for _ in range(10):
        f = rng.uniform(50.0, 20e3)
        s = complex(rng.uniform(-500.0, 0.0), 2.0 * math.pi * f)
        assert z_conv(s, PARAMS, CFG14) == pytest.approx(
            oracle_z(s, PARAMS, CFG14), rel=1e-12
        )


def test_impedance_scales_with_err_scale_in_the_gain_term():
    cfg = ControllerConfig.for_pulse_number(14, 50.0, err_scale=1.5)
    z1 = z_conv(0j, PARAMS, CFG14)
    z2 = z_conv(0j, PARAMS, cfg)
    den = complex(0.5, -0.5)  # 1 - H_pcc(-j w1) at dc
    k = k_gain(14, 50.0, PARAMS.Lt)
    assert z2 - z1 == pytest.approx(0.5 * k / den, rel=1e-12)


def test_impedance_raises_near_denominator_zero():
    cfg = DuckConfig(h_pcc=FilterConfig(1, 1e12))
    # wide-open feedforward makes the denominator vanish at s = j*w1
    cfg.h_al = FilterConfig(1, 1e12)
    with pytest.raises(SingularityError):
        z_conv(2j * math.pi * 50.0, PARAMS, cfg)


def test_dq_resistance_is_shifted_stationary_value():
    w = 2.0 * math.pi * 1000.0
    w1 = 2.0 * math.pi * 50.0
    assert resistance_dq(w, PARAMS, CFG14) == pytest.approx(
        z_conv(1j * (w + w1), PARAMS, CFG14).real, rel=1e-12
    )


# --- zero crossing ---------------------------------------------------------


def test_crossing_with_reference_settings():
    fc = find_zero_crossing(PARAMS, CFG14, 3500.0, 6500.0)
    assert fc is not None
    assert fc == pytest.approx(5851.4, abs=2.0)
    assert abs(z_conv(2j * math.pi * fc, PARAMS, CFG14).real) < 1.0


def test_crossing_bracket_must_change_sign():
    # both ends passive -> no crossing reported
    assert find_zero_crossing(PARAMS, CFG14, 100.0, 2000.0) is None


def test_first_order_antialiasing_shifts_the_crossing_upward():
    cfg = ControllerConfig.for_pulse_number(14, 50.0, h_al=FilterConfig(1, 15e3))
    assert find_zero_crossing(PARAMS, cfg, 3500.0, 6500.0) is None
    for f in (4000.0, 5851.0, 6500.0):
        assert z_conv(2j * math.pi * f, PARAMS, cfg).real > 0.0
    shifted = find_zero_crossing(PARAMS, cfg, 3500.0, 8000.0)
    assert shifted == pytest.approx(6697.3, abs=2.0)
    assert shifted > find_zero_crossing(PARAMS, CFG14, 3500.0, 6500.0)


def test_halving_the_delay_removes_the_crossing_in_band():
    cfg = ControllerConfig.for_pulse_number(14, 50.0, Td=12.5e-6)
    assert find_zero_crossing(PARAMS, cfg, 3500.0, 6500.0) is None
    assert z_conv(2j * math.pi * 5851.0, PARAMS, cfg).real > 0.0


# --- curves and persistence ------------------------------------------------


def test_model_curve_frames():
    freqs = [100.0, 500.0, 1000.0]
    ab = model_curve(freqs, PARAMS, CFG14)
    dq = model_curve(freqs, PARAMS, CFG14, frame="dq")
    assert ab.frame == "alpha_beta" and dq.frame == "dq"
    assert ab.source == "model"
    w1 = 2.0 * math.pi * 50.0
    for (f, z_ab), (_, z_dq) in zip(ab.samples, dq.samples):
        assert z_ab == pytest.approx(z_conv(2j * math.pi * f, PARAMS, CFG14))
        assert z_dq == pytest.approx(
            z_conv(1j * (2.0 * math.pi * f + w1), PARAMS, CFG14)
        )


def test_curve_validation():
    with pytest.raises(ValueError):
        ImpedanceCurve(samples=((1.0, 1j),), frame="abc", source="model")
    with pytest.raises(ValueError):
        ImpedanceCurve(samples=((1.0, 1j),), frame="dq", source="guess")
    with pytest.raises(ValueError):
        ImpedanceCurve(
            samples=((2.0, 1j), (1.0, 1j)), frame="dq", source="model"
        )
    with pytest.raises(ValueError):
        ImpedanceCurve(
            samples=((1.0, 1j), (1.0, 2j)), frame="dq", source="model"
        )
    with pytest.raises(ValueError):
        ImpedanceCurve(
            samples=((1.0, complex("nan")),), frame="dq", source="model"
        )


def test_curve_csv_round_trip(tmp_path):
    curve = model_curve([210.0, 1010.0, 2990.0], PARAMS, CFG14)
    path = tmp_path / "curve.csv"
    write_curve_csv(curve, path)
    back = read_curve_csv(path)
    assert back.frame == curve.frame and back.source == curve.source
    assert back.freqs == curve.freqs
    for (_, za), (_, zb) in zip(curve.samples, back.samples):
        assert zb == pytest.approx(za, rel=1e-8)


def test_curve_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("freq,re,im\n1,2,3\n")
    with pytest.raises(ValueError):
        read_curve_csv(path)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadsig import powercalc, synthhome
from loadsig.powercalc import HarmonicVector, PowerCalcError


def _frame(phasors, v_rms=120.0):
    return powercalc.synthesize_frame(0, "A", v_rms, phasors)


def test_single_tone_magnitude():
    h = powercalc.extract_harmonics(_frame({1: 1.0}))
    assert h.magnitudes[1] == pytest.approx(1.0, abs=1e-12)
    for k in (3, 5, 7, 9):
        assert h.magnitudes[k] == pytest.approx(0.0, abs=1e-12)


def test_two_tone_magnitudes():
    h = powercalc.extract_harmonics(_frame({1: 1.0, 3: 0.3}))
    assert h.magnitudes[1] == pytest.approx(1.0, abs=1e-12)
    assert h.magnitudes[3] == pytest.approx(0.3, abs=1e-12)


def test_orders_above_nine_are_dropped():
    h = powercalc.extract_harmonics(_frame({1: 1.0, 11: 0.5, 13: 0.2}))
    assert powercalc.compute_thd(h) == pytest.approx(0.0, abs=1e-12)


def test_degenerate_current_gives_flagged_zero_vector():
    h = powercalc.extract_harmonics(_frame({}))
    assert h.degenerate
    assert all(m == 0.0 for m in h.magnitudes.values())
    assert h.fundamental_phase == 0.0


def test_microwave_spectrum_recovered():
    mw = next(a for a in synthhome.default_scenario().appliances if a.name == "Microwave")
    comp = next(iter(mw.components.values()))
    injected = synthhome.component_phasors(comp, 120.0)
    h = powercalc.extract_harmonics(_frame(injected))
    for k, p in injected.items():
        assert h.magnitudes[k] == pytest.approx(abs(p), abs=1e-6)


@pytest.mark.parametrize("phasor, expected", [
    (10.0, (1200.0, 0.0)),
    (-10j, (0.0, 1200.0)),
])
def test_pq_fundamental(phasor, expected):
    p, q = powercalc.compute_pq(_frame({1: phasor}))
    assert p == pytest.approx(expected[0], abs=1e-9)
    assert q == pytest.approx(expected[1], abs=1e-9)


def test_pq_ignores_third_harmonic():
    p, q = powercalc.compute_pq(_frame({1: 10.0, 3: 3.0}))
    assert p == pytest.approx(1200.0, abs=1e-9)
    assert q == pytest.approx(0.0, abs=1e-9)


def test_pq_without_voltage_raises():
    f = _frame({1: 10.0}, v_rms=0.0)
    with pytest.raises(PowerCalcError, match="no reference voltage"):
        powercalc.compute_pq(f)


@pytest.mark.parametrize("mags, thd", [
    ({1: 1.0}, 0.0),
    ({1: 1.0, 3: 0.3}, 0.3),
    ({1: 1.0, 3: 0.3, 5: 0.4}, 0.5),
])
def test_thd_values(mags, thd):
    assert powercalc.compute_thd(HarmonicVector(mags)) == pytest.approx(thd, abs=1e-12)


def test_thd_undefined_without_fundamental():
    with pytest.raises(PowerCalcError, match="undefined THD"):
        powercalc.compute_thd(HarmonicVector({1: 0.0, 3: 0.2}))


def test_frame_validation():
    with pytest.raises(PowerCalcError):
        powercalc.WaveformFrame(0, "C", np.zeros((6, 64)), np.zeros((6, 64)), 64)
    with pytest.raises(PowerCalcError):
        powercalc.WaveformFrame(0, "A", np.zeros((6, 16)), np.zeros((6, 16)), 16)


def test_load_phasors_round_trip():
    ph = powercalc.load_phasors(900.0, 160.0, 0.3, 120.0, {3: 0.8, 5: 0.5})
    f = _frame(ph)
    p, q = powercalc.compute_pq(f)
    assert (p, q) == (pytest.approx(900.0), pytest.approx(160.0))
    assert powercalc.compute_thd(powercalc.extract_harmonics(f)) == pytest.approx(0.3)


mags = st.floats(0.0, 10.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 10.0), mags, mags, mags, mags, st.floats(0.01, 100.0))
def test_thd_scale_invariant(i1, i3, i5, i7, i9, lam):
    h = HarmonicVector({1: i1, 3: i3, 5: i5, 7: i7, 9: i9})
    scaled = HarmonicVector({k: lam * v for k, v in h.magnitudes.items()})
    assert math.isclose(powercalc.compute_thd(h), powercalc.compute_thd(scaled), rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 30.0), st.floats(-math.pi, math.pi), st.sampled_from([3, 5, 7, 9]),
       st.floats(0.0, 20.0), st.floats(-math.pi, math.pi))
def test_pq_invariant_to_harmonics(a1, th1, k, ak, thk):
    base = {1: a1 * np.exp(1j * th1)}
    p0, q0 = powercalc.compute_pq(_frame(base))
    p1, q1 = powercalc.compute_pq(_frame({**base, k: ak * np.exp(1j * thk)}))
    scale = 120.0 * a1
    assert abs(p1 - p0) < 1e-9 * scale
    assert abs(q1 - q0) < 1e-9 * scale


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), min_size=5, max_size=5),
       st.lists(st.floats(-math.pi, math.pi), min_size=5, max_size=5))
def test_synthesize_extract_identity(amps, angles):
    phasors = {k: a * np.exp(1j * t) for k, a, t in zip(powercalc.ODD_ORDERS, amps, angles)}
    h = powercalc.extract_harmonics(_frame(phasors))
    for k, a in zip(powercalc.ODD_ORDERS, amps):
        assert abs(h.magnitudes[k] - a) < 1e-9

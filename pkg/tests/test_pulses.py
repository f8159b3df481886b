import math

import numpy as np
import pytest

from pulsebench.pulses import (
    SEQUENTIAL,
    SHAPES,
    EnvelopeSchedule,
    PulseShape,
    PulseWindow,
    envelope_area,
    eval_envelope,
    eval_envelope_derivative,
    schedule_derivative,
    schedule_value,
)

T = 15.0


def test_gp_center():
    assert eval_envelope("gp", 0.0) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-12)


def test_lgp_center_is_zero():
    assert eval_envelope("lgp", 0.0) == 0.0


def test_ogp_center():
    assert eval_envelope("ogp", 0.0) == pytest.approx(0.5641896, abs=1e-7)


def test_gp_derivative_center():
    assert eval_envelope_derivative("gp", 0.0, T) == 0.0


def test_hgp_derivative_center():
    assert eval_envelope_derivative("hgp", 0.0, T) == pytest.approx(2 * math.sqrt(2) / T, rel=1e-14)


@pytest.mark.parametrize("name", SHAPES)
def test_derivative_matches_finite_difference(name):
    h = 1e-6 * T
    for c in np.linspace(-3, 3, 1000):
        # lgp has a kink at C = 0; the one-sided limits differ there.
        if name == "lgp" and abs(c) < 2 * h / T:
            continue
        t = c * T
        fd = (eval_envelope(name, (t + h) / T, T) - eval_envelope(name, (t - h) / T, T)) / (2 * h)
        an = eval_envelope_derivative(name, c, T)
        assert abs(an - fd) / max(1.0, abs(an)) < 1e-6


def test_sgp_and_agp_parameters():
    assert eval_envelope(PulseShape("sgp", 6), 1.0) == pytest.approx(math.exp(-1))
    skew = PulseShape("agp", agp_asymmetry=2.0)
    # Skewed Gaussian: 0.5 e^{-C^2} (1 + erf(C T / tau)).
    c = 0.3
    assert eval_envelope(skew, c, 10.0) == pytest.approx(0.5 * math.exp(-c * c) * (1 + math.erf(c * 5.0)))
    with pytest.raises(ValueError):
        PulseShape("sgp", 3)
    with pytest.raises(ValueError):
        PulseShape("box")


def test_schedule_single_window():
    sched = EnvelopeSchedule("gp", [PulseWindow(7.0, 15.0)])
    assert schedule_value(sched, 7.0) == pytest.approx(1 / math.sqrt(math.pi))


def test_schedule_empty():
    sched = EnvelopeSchedule("gp", [])
    assert all(schedule_value(sched, t) == 0 for t in np.linspace(-5, 5, 11))


def test_schedule_superposition_is_linear():
    w = PulseWindow(7.0, 15.0)
    one = EnvelopeSchedule("gp", [w])
    two = EnvelopeSchedule("gp", [w, w])
    for t in np.linspace(0, 20, 7):
        assert schedule_value(two, t) == pytest.approx(2 * schedule_value(one, t))


def test_amplitude_scale():
    sched = EnvelopeSchedule("hgp", [PulseWindow(3.0, 2.0, amplitude_scale=0.5)])
    ref = EnvelopeSchedule("hgp", [PulseWindow(3.0, 2.0)])
    assert schedule_value(sched, 3.4) == pytest.approx(0.5 * schedule_value(ref, 3.4))
    assert schedule_derivative(sched, 3.4) == pytest.approx(0.5 * schedule_derivative(ref, 3.4))


def test_sequential_schedule():
    sched = EnvelopeSchedule("gp", [PulseWindow(10.0, 5.0), PulseWindow(15.0, 5.0)], SEQUENTIAL)
    assert schedule_value(sched, 5.0) == 0.0
    assert schedule_value(sched, 30.0) == 0.0
    assert sched.active_window(12.6) == 1
    assert sched.breakpoints() == [7.5, 12.5, 17.5]
    with pytest.raises(ValueError):
        EnvelopeSchedule("gp", [PulseWindow(10.0, 5.0), PulseWindow(12.0, 5.0)], SEQUENTIAL)


def test_envelope_area_gp_window():
    # Integral of e^{-C^2}/sqrt(pi) over C in [-1/2, 1/2] is erf(1/2); dt = T dC.
    assert envelope_area("gp", 2.0) == pytest.approx(2.0 * math.erf(0.5), rel=1e-10)

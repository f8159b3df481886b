"""Analytic pulse envelopes, their time derivatives, and window schedules.

Every envelope is a dimensionless function of the normalized time
``C = (t - t_c) / T``. Derivatives are taken with respect to ``t`` and so
carry the chain factor ``1/T``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

SHAPES = ("gp", "sgp", "ogp", "lgp", "hgp", "agp")
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_TWO_SQRT2 = 2.0 * math.sqrt(2.0)
_OGP_K = 5.0 * math.pi


@dataclass(frozen=True)
class PulseShape:
    """Envelope family and its shape parameters.

    Parameters
    ----------
    name : str
        One of ``gp, sgp, ogp, lgp, hgp, agp``.
    sgp_exponent : int
        Even exponent ``n > 2`` of the super-Gaussian.
    agp_asymmetry : float or None
        Asymmetry time of the skewed Gaussian. ``None`` means half the window
        duration, resolved when the window is known.
    """

    name: str = "gp"
    sgp_exponent: int = 4
    agp_asymmetry: float | None = None

    def __post_init__(self):
        if self.name not in SHAPES:
            raise ValueError(f"unknown pulse shape {self.name!r}; expected one of {SHAPES}")
        if self.sgp_exponent <= 2 or self.sgp_exponent % 2:
            raise ValueError("sgp_exponent must be an even integer greater than 2")
        if self.agp_asymmetry is not None and not self.agp_asymmetry > 0:
            raise ValueError("agp_asymmetry must be positive")

    def tau_as(self, duration):
        """Asymmetry time for a window of the given duration."""
        return self.agp_asymmetry if self.agp_asymmetry is not None else 0.5 * duration


def _shape(shape):
    return shape if isinstance(shape, PulseShape) else PulseShape(shape)


def eval_envelope(shape, c, duration=1.0):
    """Envelope value ``f(C)``.

    Parameters
    ----------
    shape : PulseShape or str
    c : float
        Normalized time.
    duration : float
        Window duration ``T``; only the skewed Gaussian depends on it, through
        the erf argument ``C T / tau_as``.
    """
    shape = _shape(shape)
    name = shape.name
    if name == "gp":
        return _INV_SQRT_PI * math.exp(-c * c)
    if name == "sgp":
        return math.exp(-(c**shape.sgp_exponent))
    if name == "ogp":
        return _INV_SQRT_PI * math.exp(-c * c) * math.cos(_OGP_K * c)
    if name == "lgp":
        return abs(c) * math.exp(-c * c)
    if name == "hgp":
        return _TWO_SQRT2 * c * math.exp(-c * c)
    x = c * duration / shape.tau_as(duration)
    return 0.5 * math.exp(-c * c) * (1.0 + math.erf(x))


def eval_envelope_derivative(shape, c, duration):
    """Time derivative ``df/dt`` at normalized time ``c`` for a window of length ``duration``."""
    shape = _shape(shape)
    name = shape.name
    c = float(c)
    T = duration
    e = math.exp(-c * c)
    g = -2.0 * c / T * e
    if name == "gp":
        return _INV_SQRT_PI * g
    if name == "sgp":
        n = shape.sgp_exponent
        return -n * c ** (n - 1) / T * math.exp(-(c**n))
    if name == "ogp":
        return _INV_SQRT_PI * (g * math.cos(_OGP_K * c) - _OGP_K / T * e * math.sin(_OGP_K * c))
    if name == "lgp":
        sgn = (c > 0) - (c < 0)
        return e * (sgn / T - 2.0 * abs(c) * c / T)
    if name == "hgp":
        return _TWO_SQRT2 / T * e * (1.0 - 2.0 * c * c)
    tau = shape.tau_as(T)
    x = c * T / tau
    return 0.5 * g * (1.0 + math.erf(x)) + e * math.exp(-x * x) / (math.sqrt(math.pi) * tau)


def envelope_area(shape, duration, c_min=-0.5, c_max=0.5, n=2001, absolute=False):
    """Integral of ``f`` (or ``|f|``) over ``t`` for ``C`` in ``[c_min, c_max]``.

    Uses composite Simpson's rule on ``n`` points (``n`` odd).
    """
    if n % 2 == 0:
        n += 1
    cs = np.linspace(c_min, c_max, n)
    vals = np.array([eval_envelope(shape, c, duration) for c in cs])
    if absolute:
        vals = np.abs(vals)
    h = (c_max - c_min) / (n - 1)
    s = vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum()
    return float(s * h / 3.0 * duration)


@dataclass(frozen=True)
class PulseWindow:
    """A pulse placed at center ``t_c`` with characteristic duration ``T``."""

    center: float
    duration: float
    amplitude_scale: float = 1.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")

    @property
    def start(self):
        return self.center - 0.5 * self.duration

    @property
    def end(self):
        return self.center + 0.5 * self.duration

    def support(self, width=3.0):
        """Reporting interval ``[t_c - width T, t_c + width T]``."""
        return self.center - width * self.duration, self.center + width * self.duration


SUPERPOSE = "superpose"
SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class EnvelopeSchedule:
    """A pulse shape placed in one or more windows.

    ``combine="superpose"`` sums all windows at every ``t``. ``combine="sequential"``
    evaluates only the window whose ``[t_c - T/2, t_c + T/2)`` interval contains
    ``t`` and returns 0 elsewhere; such windows must not overlap.
    """

    shape: PulseShape = field(default_factory=PulseShape)
    windows: tuple = ()
    combine: str = SUPERPOSE

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        if isinstance(self.shape, str):
            object.__setattr__(self, "shape", PulseShape(self.shape))
        if self.combine not in (SUPERPOSE, SEQUENTIAL):
            raise ValueError(f"unknown combine mode {self.combine!r}")
        if self.combine == SEQUENTIAL:
            ordered = sorted(self.windows, key=lambda w: w.start)
            for a, b in zip(ordered, ordered[1:]):
                if b.start < a.end - 1e-12 * max(1.0, abs(a.end)):
                    raise ValueError(
                        f"sequential windows overlap: [{a.start}, {a.end}] and [{b.start}, {b.end}]"
                    )

    def active_window(self, t):
        """Index of the sequential window active at ``t``, or ``None``."""
        for i, w in enumerate(self.windows):
            if w.start <= t < w.end:
                return i
        return None

    def breakpoints(self):
        """Times where a sequential schedule switches on or off."""
        if self.combine != SEQUENTIAL:
            return []
        pts = set()
        for w in self.windows:
            pts.update((w.start, w.end))
        return sorted(pts)


def window_value(shape, window, t):
    """Scaled envelope of one window at time ``t``."""
    c = (t - window.center) / window.duration
    return window.amplitude_scale * eval_envelope(shape, c, window.duration)


def window_derivative(shape, window, t):
    """Scaled time derivative of one window's envelope at ``t``."""
    c = (t - window.center) / window.duration
    return window.amplitude_scale * eval_envelope_derivative(shape, c, window.duration)


def schedule_value(schedule, t):
    """Envelope of the whole schedule at time ``t``."""
    if schedule.combine == SEQUENTIAL:
        i = schedule.active_window(t)
        return 0.0 if i is None else window_value(schedule.shape, schedule.windows[i], t)
    return sum(window_value(schedule.shape, w, t) for w in schedule.windows)


def schedule_derivative(schedule, t):
    """Time derivative of :func:`schedule_value` (zero outside sequential windows)."""
    if schedule.combine == SEQUENTIAL:
        i = schedule.active_window(t)
        return 0.0 if i is None else window_derivative(schedule.shape, schedule.windows[i], t)
    return sum(window_derivative(schedule.shape, w, t) for w in schedule.windows)

"""Stochastic ingredients: Lorentzian colored noise, lattice disorder, pulse-amplitude errors."""

from dataclasses import dataclass

import numpy as np

from ._kernels import cosine_sum


@dataclass(frozen=True)
class LorentzianNoiseSpec:
    """Parameters of a Lorentzian cosine-sum noise process.

    Parameters
    ----------
    m : int
        Number of cosine components.
    s0 : float
        Peak power density.
    omega_c : float
        Center frequency of the Lorentzian.
    gamma_hwhm : float
        Half width at half maximum.
    omega_min, omega_max : float
        Range the component frequencies are drawn from.
    seed : int or tuple
        Seed for frequencies and phases.
    """

    m: int = 1000
    s0: float = 0.2
    omega_c: float = 0.5
    gamma_hwhm: float = 0.5
    omega_min: float = -5.0
    omega_max: float = 5.0
    seed: int | tuple = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("noise component count m must be at least 1")
        if not self.gamma_hwhm > 0:
            raise ValueError("gamma_hwhm must be positive")
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        if self.s0 < 0:
            raise ValueError("s0 must be non-negative")

    @property
    def delta_omega(self):
        return (self.omega_max - self.omega_min) / self.m


def psd(spec, omega):
    """Lorentzian power spectral density ``S0 / (1 + ((omega - omega_c)/Gamma)^2)``."""
    y = (np.asarray(omega, dtype=float) - spec.omega_c) / spec.gamma_hwhm
    out = spec.s0 / (1.0 + y * y)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class NoiseTrace:
    """A frozen realization ``delta_omega(t) = sum_j a_j cos(Omega_j t + phi_j)``."""

    spec: LorentzianNoiseSpec
    frequencies: np.ndarray
    phases: np.ndarray
    weights: np.ndarray

    def __call__(self, t):
        return cosine_sum(float(t), self.weights, self.frequencies, self.phases)

    def sample(self, times):
        """Vectorized evaluation on an array of times."""
        times = np.asarray(times, dtype=float)
        return np.cos(np.multiply.outer(times, self.frequencies) + self.phases) @ self.weights

    @property
    def bound(self):
        """Upper bound ``sum_j a_j`` on ``|delta_omega(t)|``."""
        return float(self.weights.sum())

    @property
    def variance(self):
        """Phase-averaged variance ``sum_j a_j^2 / 2``."""
        return float(0.5 * np.sum(self.weights**2))


class ChebyshevNoise:
    """Piecewise Chebyshev interpolant of a :class:`NoiseTrace`.

    The trace is band-limited to ``|Omega| <= max(|omega_min|, |omega_max|)``,
    so degree ``degree`` on segments of length ``segment`` reproduces it to
    near machine precision while costing a fraction of the full cosine sum.
    Segment coefficients are built on first use.
    """

    def __init__(self, trace, segment=0.5, degree=24):
        if not segment > 0 or degree < 1:
            raise ValueError("segment must be positive and degree at least 1")
        self.trace = trace
        self.spec = trace.spec
        self.segment = float(segment)
        self.degree = int(degree)
        k = np.arange(self.degree + 1)
        self._nodes = np.cos(np.pi * (k + 0.5) / (self.degree + 1))
        self._coef = {}

    def _coefficients(self, i):
        c = self._coef.get(i)
        if c is None:
            a = i * self.segment
            t = a + 0.5 * self.segment * (self._nodes + 1.0)
            c = np.polynomial.chebyshev.chebfit(self._nodes, self.trace.sample(t), self.degree)
            c = tuple(float(v) for v in c[::-1])
            self._coef[i] = c
        return c

    def __call__(self, t):
        t = float(t)
        i = int(np.floor(t / self.segment))
        x = 2.0 * (t - i * self.segment) / self.segment - 1.0
        # Clenshaw recurrence over the stored (highest-first) coefficients.
        c = self._coefficients(i)
        x2 = 2.0 * x
        b1 = b2 = 0.0
        for ck in c[:-1]:
            b1, b2 = ck + x2 * b1 - b2, b1
        return c[-1] + x * b1 - b2

    def sample(self, times):
        return np.array([self(t) for t in np.ravel(times)]).reshape(np.shape(times))

    @property
    def bound(self):
        return self.trace.bound

    @property
    def variance(self):
        return self.trace.variance


def synthesize_noise(spec, phases=None):
    """Draw frequencies and phases for ``spec`` and freeze them into a :class:`NoiseTrace`.

    ``phases`` overrides the random phases; the frequencies are still drawn from
    the seeded generator so the override does not shift other draws.
    """
    rng = np.random.default_rng(spec.seed)
    freqs = rng.uniform(spec.omega_min, spec.omega_max, spec.m)
    drawn = rng.uniform(0.0, 2.0 * np.pi, spec.m)
    if phases is not None:
        drawn = np.broadcast_to(np.asarray(phases, dtype=float), (spec.m,)).copy()
    weights = np.sqrt(2.0 * psd(spec, freqs) * spec.delta_omega)
    return NoiseTrace(
        spec,
        np.ascontiguousarray(freqs),
        np.ascontiguousarray(drawn),
        np.ascontiguousarray(weights),
    )


def sample_pulse_error(seed, index, sigma=0.05):
    """Multiplicative amplitude error ``xi ~ N(1, sigma^2)`` for pulse ``index``.

    Each (seed, index) pair has its own generator, so a pulse's error does not
    depend on how many other pulses were drawn before it.
    """
    if sigma == 0:
        return 1.0
    key = list(seed) if isinstance(seed, tuple) else [seed]
    rng = np.random.default_rng(key + [int(index)])
    return float(rng.normal(1.0, sigma))


def sample_pulse_errors(seed, count, sigma=0.05, start=0):
    """Errors for pulses ``start .. start+count-1``, identical to repeated :func:`sample_pulse_error`."""
    return np.array([sample_pulse_error(seed, start + i, sigma) for i in range(count)])


@dataclass(frozen=True)
class DisorderSpec:
    """Static on-site disorder ``d_x ~ U[-s Omega0, s Omega0]``."""

    n_sites: int = 11
    relative_strength: float = 0.01
    omega0: float = 1.0
    seed: int | tuple = 0

    def __post_init__(self):
        if self.relative_strength < 0:
            raise ValueError("relative_strength must be non-negative")
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")


def sample_disorder(spec):
    """On-site energies for every lattice site."""
    half = spec.relative_strength * spec.omega0
    if half == 0:
        return np.zeros(spec.n_sites)
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(-half, half, spec.n_sites)

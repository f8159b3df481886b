"""Time-dependent Hamiltonians assembled from typed parts.

A Hamiltonian is represented as ``H(t) = H0 + sum_k c_k(t) O_k`` with a
static Hermitian ``H0``, Hermitian operators ``O_k`` and real scalar
coefficient functions. Keeping the operators fixed lets the integrator
assemble ``H(t)`` with one fused multiply-add per term.
"""

import bisect
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import pulses
from .qstate import SMINUS, SPLUS, SX, SY, SZ, tensor_embed

HERMITIAN_TOL = 1e-10

DRIVE_FAMILIES = (
    "corrected_xy",
    "iq",
    "linear_x",
    "linear_y",
    "linear_z",
    "lcp",
    "rcp",
    "global_dd",
    "local_axis",
    "floquet",
)


@dataclass
class HamiltonianPart:
    """One additive piece of a Hamiltonian.

    Attributes
    ----------
    static : ndarray
        Time-independent matrix.
    ops : list of ndarray
        Operators multiplied by the coefficients.
    coef_fn : callable or None
        ``coef_fn(t)`` returns one real coefficient per operator.
    breakpoints : list of float
        Times where the coefficients are not smooth.
    resolution : list of (float, float, float)
        ``(start, end, max_step)`` hints for resolving pulse features.
    period : float or None
        Period of a periodically restarted envelope; every multiple is a
        breakpoint.
    """

    static: np.ndarray
    ops: list = field(default_factory=list)
    coef_fn: object = None
    breakpoints: list = field(default_factory=list)
    resolution: list = field(default_factory=list)
    period: float | None = None

    @property
    def dim(self):
        return self.static.shape[0]

    def __call__(self, t):
        h = self.static.copy()
        if self.ops:
            for c, op in zip(self.coef_fn(t), self.ops):
                h = h + c * op
        return h


class HamiltonianAssembly:
    """Pointwise sum of :class:`HamiltonianPart` objects."""

    def __init__(self, parts, check_times=None):
        parts = list(parts)
        if not parts:
            raise ValueError("an assembly needs at least one part")
        dim = parts[0].dim
        for p in parts:
            if p.dim != dim:
                raise ValueError(f"part dimension {p.dim} does not match {dim}")
        self.dim = dim
        self.parts = parts
        self.h0 = np.ascontiguousarray(sum(p.static for p in parts), dtype=complex)
        ops = [op for p in parts for op in p.ops]
        self.ops = (
            np.ascontiguousarray(np.array(ops, dtype=complex))
            if ops
            else np.zeros((0, dim, dim), dtype=complex)
        )
        fns = [p.coef_fn for p in parts if p.ops]
        if not fns:
            self.coefficients = None
        elif len(fns) == 1:
            self.coefficients = fns[0]
        else:

            def coefficients(t, _fns=tuple(fns)):
                out = []
                for f in _fns:
                    out.extend(f(t))
                return out

            self.coefficients = coefficients
        self.breakpoints = sorted({b for p in parts for b in p.breakpoints})
        self.resolution = [r for p in parts for r in p.resolution]
        self.periods = sorted({p.period for p in parts if p.period})
        if check_times is not None:
            self.check_hermitian(check_times)

    @property
    def n_terms(self):
        return self.ops.shape[0]

    def coefficient_array(self, t):
        if self.coefficients is None:
            return np.zeros(0)
        return np.asarray(self.coefficients(t), dtype=float)

    def __call__(self, t):
        c = self.coefficient_array(t)
        if c.size == 0:
            return self.h0.copy()
        return self.h0 + np.tensordot(c, self.ops, axes=1)

    def check_hermitian(self, times, tol=HERMITIAN_TOL):
        """Raise if ``H(t)`` is not Hermitian at any of ``times``."""
        for t in np.atleast_1d(times):
            h = self(float(t))
            res = float(np.max(np.abs(h - h.conj().T)))
            if res > tol:
                raise ValueError(f"H(t) not Hermitian at t={t}: residue {res:.3e}")


def assemble(*parts, check_times=None):
    """Sum parts into a :class:`HamiltonianAssembly`; optionally assert Hermiticity at ``check_times``."""
    return HamiltonianAssembly(parts, check_times=check_times)


def constant_part(matrix):
    """A time-independent part."""
    return HamiltonianPart(np.array(matrix, dtype=complex))


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class SystemSpec:
    """Qubit register with Zeeman splittings and optional per-qubit noise traces.

    ``noise`` has one entry per qubit, either ``None`` or a callable
    ``delta_omega(t)`` such as a :class:`~pulsebench.noise.NoiseTrace`.
    """

    omega_q: tuple
    noise: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "omega_q", tuple(float(w) for w in self.omega_q))
        if not self.omega_q:
            raise ValueError("SystemSpec needs at least one qubit")
        if not all(math.isfinite(w) for w in self.omega_q):
            raise ValueError("qubit frequencies must be finite")
        noise = tuple(self.noise) + (None,) * (len(self.omega_q) - len(self.noise))
        if len(noise) != len(self.omega_q):
            raise ValueError("more noise traces than qubits")
        object.__setattr__(self, "noise", noise)

    @property
    def n_qubits(self):
        return len(self.omega_q)


@dataclass(frozen=True)
class CouplingSpec:
    """Nearest-neighbour coupling: ``kind`` is ``"xy"`` (flip-flop) or ``"yy"`` (sigma_y sigma_y)."""

    kind: str = "xy"
    g: tuple = (0.5,)

    def __post_init__(self):
        if self.kind not in ("xy", "yy"):
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        g = (self.g,) if np.isscalar(self.g) else tuple(self.g)
        object.__setattr__(self, "g", tuple(float(x) for x in g))

    def bonds(self, n_qubits):
        if len(self.g) == 1 and n_qubits > 2:
            return self.g * (n_qubits - 1)
        if len(self.g) != n_qubits - 1:
            raise ValueError(f"{len(self.g)} coupling strengths for {n_qubits - 1} bonds")
        return self.g


@dataclass(frozen=True)
class Harmonic:
    """One Floquet harmonic: amplitude ``A``, phase ``phi`` and frequency multiplier ``nu``."""

    amplitude: float
    phase: float = 0.0
    nu: float = 1.0


@dataclass(frozen=True)
class DriveSpec:
    """Drive description shared by all families.

    Parameters
    ----------
    family : str
        One of :data:`DRIVE_FAMILIES`.
    amplitudes : tuple of float
        Per-qubit amplitudes (lambda or Omega0). For ``floquet`` the single
        entry is the global factor ``A_pulse``.
    omega_d, phase : float
        Carrier frequency and phase. For ``floquet``, ``omega_d`` is the drive
        frequency ``Omega`` with period ``2 pi / Omega``.
    envelope : EnvelopeSchedule or None
        Envelope of the drive. For ``floquet`` the first window sets the
        duration of the per-period pulse.
    pulse_amplitudes, pulse_phases : tuple of float
        Per-window amplitude ``theta_k`` and rotation axis for the pulsed
        families ``global_dd`` and ``local_axis``, where ``Omega(t) =
        theta_k xi_k f(C_k)`` and the Hamiltonian is ``Omega/2 (cos phi X + sin phi Y)``.
    harmonics : tuple of Harmonic
        Floquet harmonics.
    target_qubit : int
        Qubit addressed by ``local_axis``.
    first_pulse_index : int
        Index of the first window in the run-wide pulse count; selects the
        stochastic amplitude error drawn for each window.
    """

    family: str
    amplitudes: tuple = (1.0,)
    omega_d: float = 5.0
    phase: float = 0.0
    envelope: pulses.EnvelopeSchedule | None = None
    pulse_amplitudes: tuple = ()
    pulse_phases: tuple = ()
    harmonics: tuple = ()
    target_qubit: int = 0
    first_pulse_index: int = 0

    def __post_init__(self):
        if self.family not in DRIVE_FAMILIES:
            raise ValueError(f"unknown drive family {self.family!r}")
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in np.atleast_1d(self.amplitudes)))
        if not all(math.isfinite(a) for a in self.amplitudes):
            raise ValueError("drive amplitudes must be finite")
        object.__setattr__(self, "harmonics", tuple(self.harmonics))
        object.__setattr__(self, "pulse_amplitudes", tuple(self.pulse_amplitudes))
        object.__setattr__(self, "pulse_phases", tuple(self.pulse_phases))
        if self.family == "corrected_xy" and self.omega_d == 0:
            raise ValueError("the corrected drive divides by omega_d; omega_d = 0 is not allowed")
        if self.family == "floquet" and not self.harmonics:
            raise ValueError("a Floquet drive needs at least one harmonic")


@dataclass(frozen=True)
class ErrorSpec:
    """Control imperfections.

    Parameters
    ----------
    detuning : float
        Static detuning on qubit 0. Each Hamiltonian family applies it with the
        prefactor of its own equation.
    amplitude_error : float
        Systematic relative amplitude error ``epsilon_A``.
    stochastic_pulse_error : bool
        Draw an independent ``xi ~ N(1, sigma^2)`` for every pulse window.
    pulse_error_sigma : float
        Standard deviation of ``xi``.
    seed : int or tuple
        Seed of the per-pulse draws.
    """

    detuning: float = 0.0
    amplitude_error: float = 0.0
    stochastic_pulse_error: bool = False
    pulse_error_sigma: float = 0.05
    seed: int | tuple = 0

    def pulse_factor(self, index):
        from .noise import sample_pulse_error

        if not self.stochastic_pulse_error:
            return 1.0
        return sample_pulse_error(self.seed, index, self.pulse_error_sigma)


# --------------------------------------------------------------- builders


_PAULIS = {"x": SX, "y": SY, "z": SZ, "+": SPLUS, "-": SMINUS}


@functools.lru_cache(maxsize=256)
def _on(label, site, n_qubits):
    """Cached read-only ``tensor_embed`` of a named single-qubit operator."""
    out = tensor_embed(_PAULIS[label], site, n_qubits)
    out.flags.writeable = False
    return out


def _zeros(dim):
    return np.zeros((dim, dim), dtype=complex)


def _schedule_resolution(schedule, fraction=20.0):
    out = []
    for w in schedule.windows:
        if schedule.combine == pulses.SEQUENTIAL:
            a, b = w.start, w.end
        else:
            a, b = w.support()
        out.append((a, b, w.duration / fraction))
    return out


def build_static(spec):
    """``sum_k (omega_k/2 + delta_omega_k(t)) sigma_z,k``."""
    n = spec.n_qubits
    h0 = sum(0.5 * w * _on("z", k, n) for k, w in enumerate(spec.omega_q))
    ops, fns = [], []
    for k, trace in enumerate(spec.noise):
        if trace is not None:
            ops.append(_on("z", k, n))
            fns.append(trace)
    if not ops:
        return HamiltonianPart(np.asarray(h0, dtype=complex))
    if len(fns) == 1:
        f0 = fns[0]

        def coef(t):
            return (f0(t),)

    else:

        def coef(t):
            return [f(t) for f in fns]

    return HamiltonianPart(np.asarray(h0, dtype=complex), ops, coef)


def interaction_operator(spec, n_qubits):
    """Time-independent nearest-neighbour coupling operator."""
    dim = 2**n_qubits
    h = _zeros(dim)
    for k, g in enumerate(spec.bonds(n_qubits)):
        if spec.kind == "xy":
            h += g * (
                _on("+", k, n_qubits) @ _on("-", k + 1, n_qubits)
                + _on("-", k, n_qubits) @ _on("+", k + 1, n_qubits)
            )
        else:
            h += g * _on("y", k, n_qubits) @ _on("y", k + 1, n_qubits)
    return h


def build_interaction(spec, n_qubits, envelope=None, outside=None):
    """Coupling part, optionally modulated by an envelope schedule.

    Parameters
    ----------
    spec : CouplingSpec
    n_qubits : int
    envelope : EnvelopeSchedule, optional
        Without an envelope the coupling is static. With one, the coupling is
        multiplied by ``schedule_value(t)``.
    outside : float, optional
        For sequential schedules only: the multiplier used when no window is
        active. ``outside=1`` gives ``g(t) = g f`` during pulses and ``g``
        otherwise; the default leaves the coupling off between pulses.
    """
    base = interaction_operator(spec, n_qubits)
    if envelope is None:
        return HamiltonianPart(base)
    sched = envelope
    res = _schedule_resolution(sched)
    bps = sched.breakpoints()
    if sched.combine == pulses.SEQUENTIAL and outside:
        fill = float(outside)
        starts = [w.start for w in sched.windows]
        order = np.argsort(starts)
        starts = [starts[i] for i in order]
        wins = [sched.windows[i] for i in order]
        shape = sched.shape

        def coef(t):
            i = bisect.bisect_right(starts, t) - 1
            if i >= 0 and t < wins[i].end:
                return (pulses.window_value(shape, wins[i], t),)
            return (fill,)

    else:

        def coef(t):
            return (pulses.schedule_value(sched, t),)

    return HamiltonianPart(_zeros(base.shape[0]), [base], coef, bps, res)


@functools.lru_cache(maxsize=64)
def _collective_named(label, n_qubits):
    out = _collective(_PAULIS[label], n_qubits)
    out.flags.writeable = False
    return out


@functools.lru_cache(maxsize=64)
def _pair_named(label, n_qubits):
    out = pair_sum(_PAULIS[label], n_qubits)
    out.flags.writeable = False
    return out


def _collective(pauli, n_qubits):
    out = np.array([[1.0 + 0j]])
    for _ in range(n_qubits):
        out = np.kron(out, pauli)
    return out


def pair_sum(pauli, n_qubits):
    """``sum_j sigma_a,j sigma_a,j+1`` over nearest neighbours."""
    return sum(
        tensor_embed(pauli, j, n_qubits) @ tensor_embed(pauli, j + 1, n_qubits)
        for j in range(n_qubits - 1)
    )


def _pulse_train_part(spec, errors, n_qubits, op_x, op_y):
    sched = spec.envelope
    if sched is None or sched.combine != pulses.SEQUENTIAL:
        raise ValueError(f"{spec.family} needs a sequential envelope schedule")
    n_win = len(sched.windows)
    thetas = spec.pulse_amplitudes or (1.0,) * n_win
    phis = spec.pulse_phases or (0.0,) * n_win
    if len(thetas) != n_win or len(phis) != n_win:
        raise ValueError("pulse_amplitudes and pulse_phases need one entry per window")
    order = sorted(range(n_win), key=lambda i: sched.windows[i].start)
    wins = [sched.windows[i] for i in order]
    starts = [w.start for w in wins]
    amp_x, amp_y = [], []
    for i in order:
        a = 0.5 * thetas[i] * errors.pulse_factor(spec.first_pulse_index + i)
        amp_x.append(a * math.cos(phis[i]))
        amp_y.append(a * math.sin(phis[i]))
    shape = sched.shape
    zero = (0.0, 0.0)

    def coef(t):
        k = bisect.bisect_right(starts, t) - 1
        if k < 0 or t >= wins[k].end:
            return zero
        f = pulses.window_value(shape, wins[k], t)
        return (amp_x[k] * f, amp_y[k] * f)

    return HamiltonianPart(
        _zeros(2**n_qubits),
        [op_x, op_y],
        coef,
        sched.breakpoints(),
        _schedule_resolution(sched),
    )


def build_drive(spec, errors=None, n_qubits=2):
    """Drive part for every supported family.

    ``global_dd`` also carries the static detuning ``delta_det sigma_z,0``.
    ``floquet`` uses per-harmonic amplitudes ``A_i (1 + epsilon_A)`` and the
    periodic envelope ``f(t mod T_Omega)`` centered mid-period.
    """
    errors = errors or ErrorSpec()
    n = n_qubits
    dim = 2**n
    fam = spec.family

    if fam == "global_dd":
        part = _pulse_train_part(spec, errors, n, _collective_named("x", n), _collective_named("y", n))
        if errors.detuning:
            part.static = part.static + errors.detuning * _on("z", 0, n)
        return part

    if fam == "local_axis":
        q = spec.target_qubit
        return _pulse_train_part(spec, errors, n, _on("x", q, n), _on("y", q, n))

    if fam == "floquet":
        return _floquet_part(spec, errors, n)

    sched = spec.envelope
    if sched is None:
        raise ValueError(f"{fam} drive needs an envelope schedule")
    amps = spec.amplitudes
    if len(amps) == 1 and n > 1:
        amps = amps + (0.0,) * (n - 1)
    if len(amps) != n:
        raise ValueError(f"{len(amps)} drive amplitudes for {n} qubits")
    qubits = [k for k, a in enumerate(amps) if a != 0.0]
    w, ph = spec.omega_d, spec.phase
    env = sched
    ops = []
    scales = []
    # Each entry of `kinds` selects which carrier multiplies the operator:
    # 0 -> E cos, 1 -> E sin, 2 -> Edot cos / omega_d.
    kinds = []
    for k in qubits:
        a = amps[k]
        sx, sy, sz = (_on(lab, k, n) for lab in "xyz")
        if fam == "corrected_xy":
            ops += [sx, sy]
            scales += [0.5 * a, 0.5 * a / w]
            kinds += [0, 2]
        elif fam == "iq":
            ops += [sx, sy]
            scales += [0.5 * a, 0.5 * a]
            kinds += [0, 1]
        elif fam == "linear_x":
            ops.append(sx)
            scales.append(a)
            kinds.append(0)
        elif fam == "linear_y":
            ops.append(sy)
            scales.append(a)
            kinds.append(1)
        elif fam == "linear_z":
            ops.append(sz)
            scales.append(a)
            kinds.append(0)
        elif fam in ("lcp", "rcp"):
            ops += [sx, sy]
            scales += [a, a if fam == "lcp" else -a]
            kinds += [0, 1]
    if not ops:
        return HamiltonianPart(_zeros(dim))
    kinds = tuple(kinds)
    scales = tuple(scales)
    needs_dot = 2 in kinds
    # The linear families in the sequential-polarization protocol use a carrier
    # without phase offset; the others use omega_d t + phi_d.
    phase = 0.0 if fam in ("linear_x", "linear_y", "linear_z", "lcp", "rcp") else ph

    def coef(t):
        e = pulses.schedule_value(env, t)
        arg = w * t + phase
        c, s = math.cos(arg), math.sin(arg)
        edot = pulses.schedule_derivative(env, t) if needs_dot else 0.0
        out = []
        for kind, sc in zip(kinds, scales):
            if kind == 0:
                out.append(sc * e * c)
            elif kind == 1:
                out.append(sc * e * s)
            else:
                out.append(sc * edot * c)
        return out

    return HamiltonianPart(_zeros(dim), ops, coef, env.breakpoints(), _schedule_resolution(env))


def floquet_period(omega):
    return 2.0 * math.pi / omega


def _floquet_part(spec, errors, n):
    omega = spec.omega_d
    period = floquet_period(omega)
    a_pulse = spec.amplitudes[0]
    shape = spec.envelope.shape if spec.envelope is not None else pulses.PulseShape()
    t_env = spec.envelope.windows[0].duration if spec.envelope and spec.envelope.windows else period / 4
    window = pulses.PulseWindow(0.5 * period, t_env)
    scale = 1.0 + errors.amplitude_error
    harm = [(h.amplitude * scale, math.cos(h.phase), math.sin(h.phase), h.nu) for h in spec.harmonics]
    ox = _pair_named("x", n)
    oy = _pair_named("y", n)

    def coef(t):
        tp = t - period * math.floor(t / period)
        f = 0.5 * a_pulse * pulses.window_value(shape, window, tp)
        cx = cy = 0.0
        for amp, cph, sph, nu in harm:
            carrier = amp * math.cos(nu * omega * t)
            cx += carrier * cph
            cy += carrier * sph
        return (f * cx, f * cy)

    return HamiltonianPart(_zeros(2**n), [ox, oy], coef, period=period)


def build_error(errors, n_qubits, noise=None):
    """``delta_omega(t)/2 sigma_z,0 + Delta/2 sigma_z,0``: the error term of the periodic-drive
    and generation models. ``noise`` is an optional callable ``delta_omega(t)``."""
    sz0 = _on("z", 0, n_qubits)
    static = 0.5 * errors.detuning * sz0
    if noise is None:
        return HamiltonianPart(static)
    return HamiltonianPart(static, [sz0], lambda t: (0.5 * noise(t),))

"""Lindblad master-equation integration on a fixed output grid."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import StepUnderflow
from .qstate import SMINUS, SZ, StateValidationError, tensor_embed, validate_state

__all__ = [
    "LindbladSpec",
    "collapse_operators",
    "lindblad_rhs",
    "IntegratorConfig",
    "Trajectory",
    "evolve",
    "evolve_piecewise",
    "StepUnderflow",
    "InvariantViolation",
]


class InvariantViolation(RuntimeError):
    """A stored state left the density-matrix manifold by more than the tolerance."""


@dataclass(frozen=True)
class LindbladSpec:
    """Amplitude-damping rates ``gamma1`` and dephasing rates ``gamma_phi`` per qubit.

    A scalar rate applies to every qubit.
    """

    gamma1: tuple = (0.0,)
    gamma_phi: tuple = (0.0,)

    def __post_init__(self):
        for name in ("gamma1", "gamma_phi"):
            val = getattr(self, name)
            val = (float(val),) if np.isscalar(val) else tuple(float(v) for v in val)
            if any(v < 0 or not math.isfinite(v) for v in val):
                raise ValueError(f"{name} rates must be finite and non-negative")
            object.__setattr__(self, name, val)

    @classmethod
    def from_times(cls, t1, t2_star):
        """Rates from relaxation times: ``gamma1 = 1/T1``, ``gamma_phi = 1/T2* - gamma1/2``."""
        g1 = tuple(1.0 / t for t in np.atleast_1d(t1))
        gphi = tuple(1.0 / t2 - 0.5 * g for t2, g in zip(np.atleast_1d(t2_star), g1))
        if any(g < 0 for g in gphi):
            raise ValueError("T2* must not exceed 2 T1")
        return cls(g1, gphi)

    def rates(self, n_qubits):
        def expand(v):
            if len(v) == 1:
                return v * n_qubits
            if len(v) != n_qubits:
                raise ValueError(f"{len(v)} rates given for {n_qubits} qubits")
            return v

        return expand(self.gamma1), expand(self.gamma_phi)


def collapse_operators(spec, n_qubits, local_dims=None, sites=None):
    """``sqrt(gamma1) sigma_minus`` and ``sqrt(gamma_phi) sigma_z`` for every qubit with a nonzero rate.

    ``local_dims`` and ``sites`` embed the qubit channels in a larger product
    space, for instance the coin of a walk (``local_dims=[2, 11]``, ``sites=[0]``).
    """
    g1, gphi = spec.rates(n_qubits)
    sites = list(range(n_qubits)) if sites is None else list(sites)
    n_sub = len(local_dims) if local_dims is not None else n_qubits
    ops = []
    for k, site in enumerate(sites):
        if g1[k] > 0:
            ops.append(math.sqrt(g1[k]) * tensor_embed(SMINUS, site, n_sub, local_dims))
        if gphi[k] > 0:
            ops.append(math.sqrt(gphi[k]) * tensor_embed(SZ, site, n_sub, local_dims))
    return ops


def lindblad_rhs(h, rho, ls):
    """``-i[H, rho] + sum_L (L rho L^+ - {L^+ L, rho}/2)``."""
    ls = np.asarray(ls, dtype=complex).reshape(-1, *np.shape(rho))
    return _kernels.lindblad_rhs(
        np.ascontiguousarray(h, dtype=complex), np.ascontiguousarray(rho, dtype=complex), ls
    )


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    Parameters
    ----------
    rtol, atol : float
        Tolerances of the RMS error norm.
    max_step : float or None
        Global step cap. ``None`` uses the output spacing; pulse windows tighten
        it further to a twentieth of their duration while they are active.
    grid : array_like or None
        Output times, strictly increasing. The first entry is the start time.
    drift_tol : float
        Hermiticity and trace drift that triggers a projection after a step.
    validate_tol : float
        Tolerance of the density-matrix checks on stored states.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float | None = None
    grid: tuple | None = None
    drift_tol: float = 1e-12
    validate_tol: float = 1e-6

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0):
                raise ValueError("the output grid must be strictly increasing")
            object.__setattr__(self, "grid", tuple(g.tolist()))

    def with_grid(self, grid):
        return IntegratorConfig(self.rtol, self.atol, self.max_step, grid, self.drift_tol, self.validate_tol)


@dataclass
class Trajectory:
    """States and named metric series on an output grid."""

    times: np.ndarray
    states: np.ndarray
    metrics: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self):
        return self.states[-1]

    def metric(self, name):
        return self.metrics[name]

    def add_metric(self, name, fn):
        """Evaluate ``fn(rho)`` on every stored state and keep the series under ``name``."""
        self.metrics[name] = np.array([fn(r) for r in self.states], dtype=float)
        return self.metrics[name]

    @staticmethod
    def concatenate(parts):
        """Join trajectories whose grids follow each other; duplicated boundary times keep the later state."""
        times, states = [], []
        names = list(parts[0].metrics) if parts else []
        series = {n: [] for n in names}
        for p in parts:
            if times and p.times[0] <= times[-1][-1]:
                # The boundary point of the previous part is replaced by this part's first point.
                times[-1] = times[-1][:-1]
                states[-1] = states[-1][:-1]
                for n in names:
                    series[n][-1] = series[n][-1][:-1]
            times.append(np.asarray(p.times))
            states.append(np.asarray(p.states))
            for n in names:
                series[n].append(np.asarray(p.metrics[n]))
        info = {}
        for p in parts:
            for k, v in p.info.items():
                if isinstance(v, (int, float)) and not isinstance(v, bool):
                    info[k] = info.get(k, 0) + v
        return Trajectory(
            np.concatenate(times),
            np.concatenate(states),
            {n: np.concatenate(series[n]) for n in names},
            info,
        )


def _split_points(assembly, t0, t1):
    pts = {t0, t1}
    for b in assembly.breakpoints:
        if t0 < b < t1:
            pts.add(b)
    for a, b, _ in assembly.resolution:
        for x in (a, b):
            if t0 < x < t1:
                pts.add(x)
    for period in getattr(assembly, "periods", ()):
        k = math.floor(t0 / period) + 1
        while k * period < t1:
            pts.add(k * period)
            k += 1
    out = sorted(pts)
    # Drop split points closer than rounding to each other.
    merged = [out[0]]
    for x in out[1:]:
        if x - merged[-1] > 1e-12 * max(1.0, abs(x)):
            merged.append(x)
    merged[-1] = t1
    return merged


def _piece_max_step(assembly, a, b, base):
    h = base
    for s, e, dt in assembly.resolution:
        if s < b and e > a:
            h = min(h, dt)
    return h


def _ls_array(ls, dim):
    ls = list(ls)
    if not ls:
        return np.zeros((0, dim, dim), dtype=complex)
    return np.ascontiguousarray(np.array(ls, dtype=complex))


def evolve(rho0, assembly, ls, config=None, metrics=None, grid=None):
    """Integrate the Lindblad equation over the output grid.

    Parameters
    ----------
    rho0 : array_like
        Initial density matrix at ``grid[0]``.
    assembly : HamiltonianAssembly
    ls : sequence of ndarray
        Collapse operators.
    config : IntegratorConfig, optional
    metrics : dict, optional
        ``name -> fn(rho)`` evaluated on every stored state.
    grid : array_like, optional
        Output grid; overrides ``config.grid``.

    Returns
    -------
    Trajectory
        Stored states include ``rho0`` at the first grid point.

    Raises
    ------
    StepUnderflow
        The adaptive step collapsed.
    InvariantViolation
        A stored state fails validation at ``config.validate_tol``.
    """
    config = config or IntegratorConfig()
    grid = np.asarray(grid if grid is not None else config.grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("an output grid is required")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("the output grid must be strictly increasing")
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (assembly.dim, assembly.dim):
        raise ValueError(f"state dimension {rho.shape} does not match the Hamiltonian ({assembly.dim})")
    trace0 = float(np.trace(rho).real)
    try:
        validate_state(rho, config.validate_tol, expected_trace=trace0)
    except StateValidationError as exc:
        raise InvariantViolation(f"initial state invalid: {exc}") from exc
    lsa = _ls_array(ls, assembly.dim)
    states = np.empty((grid.size,) + rho.shape, dtype=complex)
    states[0] = rho
    n_acc = n_rej = 0
    if grid.size > 1:
        t0, t1 = float(grid[0]), float(grid[-1])
        spacing = float(np.min(np.diff(grid)))
        base = min(spacing, config.max_step) if config.max_step else spacing
        pieces = _split_points(assembly, t0, t1)
        i_next = 1
        coef = assembly.coefficients
        for a, b in zip(pieces, pieces[1:]):
            j = i_next
            while j < grid.size and grid[j] <= b + 1e-13 * max(1.0, abs(b)):
                j += 1
            t_out = grid[i_next:j]
            out, rho, acc, rej, _ = _kernels.dp45(
                coef,
                assembly.h0,
                assembly.ops,
                lsa,
                rho,
                a,
                b,
                np.ascontiguousarray(t_out),
                config.rtol,
                config.atol,
                _piece_max_step(assembly, a, b, base),
                0.0,
                config.drift_tol,
            )
            states[i_next:j] = out
            i_next = j
            n_acc += acc
            n_rej += rej
    for k in range(grid.size):
        try:
            validate_state(states[k], config.validate_tol, expected_trace=trace0)
        except StateValidationError as exc:
            raise InvariantViolation(f"state at t={grid[k]!r} invalid: {exc}") from exc
    traj = Trajectory(grid.copy(), states, {}, {"steps_accepted": n_acc, "steps_rejected": n_rej})
    for name, fn in (metrics or {}).items():
        traj.add_metric(name, fn)
    return traj


def evolve_piecewise(rho0, segments, maps=None, config=None, metrics=None):
    """Evolve through contiguous segments with state maps applied at the joins.

    Parameters
    ----------
    rho0 : array_like
    segments : sequence of (assembly, ls, grid)
        Each grid must start where the previous one ended.
    maps : sequence of callable, optional
        ``maps[i](rho)`` is applied after segment ``i``; one entry per join
        (``len(segments) - 1``) or one per segment, in which case the last map
        also acts on the final state. ``None`` entries are skipped.

    Returns
    -------
    Trajectory
        At every join the stored state is the post-map state.
    """
    segments = list(segments)
    maps = list(maps or [])
    if len(maps) not in (0, len(segments) - 1, len(segments)):
        raise ValueError("maps needs one entry per join or per segment")
    config = config or IntegratorConfig()
    rho = np.array(rho0, dtype=complex)
    parts = []
    prev_end = None
    for i, (assembly, ls, grid) in enumerate(segments):
        grid = np.asarray(grid, dtype=float)
        if prev_end is not None and abs(grid[0] - prev_end) > 1e-12 * max(1.0, abs(prev_end)):
            raise ValueError(f"segment {i} starts at {grid[0]} but the previous one ended at {prev_end}")
        traj = evolve(rho, assembly, ls, config, None, grid)
        rho = traj.states[-1]
        if i < len(maps) and maps[i] is not None:
            rho = np.array(maps[i](rho), dtype=complex)
            traj.states[-1] = rho
        parts.append(traj)
        prev_end = grid[-1]
    traj = Trajectory.concatenate(parts)
    for name, fn in (metrics or {}).items():
        traj.add_metric(name, fn)
    return traj

"""Discrete-time quantum walk with a pulse-shaped coin.

The Hilbert space is ``coin (x) position`` with the coin as the left factor.
Position index ``i`` holds site label ``x = i - (N_s - 1)/2``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import pulses
from .dynamics import IntegratorConfig, LindbladSpec, Trajectory, collapse_operators, evolve
from .hamiltonians import HamiltonianPart, assemble
from .metrics import mutual_information, site_probabilities, walk_entanglement_entropy
from .noise import DisorderSpec, LorentzianNoiseSpec, sample_disorder, synthesize_noise
from .qstate import ID2, SX, SY, SZ

AS_WRITTEN = "as_written"
CYCLIC = "cyclic"
OBSERVATION_SCALARS = 6


@dataclass(frozen=True)
class CoinAction:
    """Normalized coin action; every entry is clamped to ``[-1, 1]``."""

    a_amp: float = 0.0
    a_phi: float = 0.0
    a_timing: float = 0.0

    def __post_init__(self):
        for name in ("a_amp", "a_phi", "a_timing"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, min(1.0, max(-1.0, v)))

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float).ravel()
        if a.size != 3:
            raise ValueError(f"coin actions have 3 entries, got {a.size}")
        return cls(*a)

    @property
    def theta(self):
        return 0.5 * (self.a_amp + 1.0) * 3.0 * math.pi

    @property
    def phi(self):
        return self.a_phi * math.pi


@dataclass(frozen=True)
class WalkConfig:
    """Walk parameters.

    ``disorder`` is the relative strength ``s`` of ``d_x ~ U[-s Omega0, s Omega0]``;
    ``noise`` is the coin dephasing spectrum (``None`` disables it).
    """

    n_sites: int = 11
    n_steps: int = 30
    dt_step: float = 0.5
    omega0: float = 1.0
    x_target: int = -3
    tau: float = 7.5
    shape: pulses.PulseShape = field(default_factory=pulses.PulseShape)
    disorder: float = 0.01
    noise: LorentzianNoiseSpec | None = None
    gamma1: float = 0.0
    gamma_phi: float = 0.0
    boundary: str = AS_WRITTEN
    seed: int = 0
    t_offset: float = 0.0
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ValueError("n_sites must be odd and at least 3")
        half = (self.n_sites - 1) // 2
        if not -half <= self.x_target <= half:
            raise ValueError(f"x_target must lie in [-{half}, {half}]")
        if self.boundary not in (AS_WRITTEN, CYCLIC):
            raise ValueError(f"boundary must be {AS_WRITTEN!r} or {CYCLIC!r}")
        if not (self.dt_step > 0 and self.tau > 0 and self.n_steps >= 1):
            raise ValueError("dt_step, tau and n_steps must be positive")
        if isinstance(self.shape, str):
            object.__setattr__(self, "shape", pulses.PulseShape(self.shape))

    @classmethod
    def from_scenario(cls, cfg):
        from .protocols import substream

        noise = None
        if cfg.noise_enabled and cfg.s0 > 0:
            noise = LorentzianNoiseSpec(
                cfg.m, cfg.s0, cfg.omega_c, cfg.gamma_hwhm, cfg.omega_min, cfg.omega_max,
                substream(cfg.seed, "noise"),
            )
        return cls(
            n_sites=cfg.n_sites, n_steps=cfg.walk_steps, dt_step=cfg.dt_step, omega0=cfg.omega0,
            x_target=cfg.x_target, tau=cfg.walk_tau, shape=cfg.pulse_shape, disorder=cfg.disorder,
            noise=noise, gamma1=cfg.gamma1, gamma_phi=cfg.gamma_phi, boundary=cfg.boundary,
            seed=cfg.seed, t_offset=cfg.t_offset, rtol=cfg.rtol, atol=cfg.atol,
        )

    @property
    def half(self):
        return (self.n_sites - 1) // 2

    @property
    def dim(self):
        return 2 * self.n_sites

    @property
    def t_center(self):
        return 0.5 * self.n_steps * self.dt_step

    def pulse_center(self, action):
        return self.t_center + action.a_timing * 3.0 * self.dt_step


def shift_operator(n_sites=11, boundary=AS_WRITTEN):
    """``S = |0><0| (x) S_R + |1><1| (x) S_L``.

    ``as_written`` keeps the defining sums, so the edge columns map to zero;
    ``cyclic`` closes the lattice into a ring and ``S`` is a permutation.
    """
    s_r = np.diag(np.ones(n_sites - 1), -1).astype(complex)
    s_l = np.diag(np.ones(n_sites - 1), 1).astype(complex)
    if boundary == CYCLIC:
        s_r[0, -1] = 1.0
        s_l[-1, 0] = 1.0
    elif boundary != AS_WRITTEN:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    return np.kron(p0, s_r) + np.kron(p1, s_l)


def initial_walk_state(n_sites=11):
    """``(|0> + i|1>)/sqrt(2) (x) |x=0>`` as a density matrix."""
    coin = np.array([1.0, 1.0j]) / math.sqrt(2.0)
    pos = np.zeros(n_sites, dtype=complex)
    pos[(n_sites - 1) // 2] = 1.0
    psi = np.kron(coin, pos)
    return np.outer(psi, psi.conj())


class WalkModel:
    """Frozen noise, disorder and operators of one walk realization."""

    def __init__(self, config):
        from .protocols import STREAMS

        self.config = config
        n = config.n_sites
        eye_p = np.eye(n, dtype=complex)
        self.op_x = np.kron(SX, eye_p)
        self.op_y = np.kron(SY, eye_p)
        self.op_z = np.kron(SZ, eye_p)
        self.shift = shift_operator(n, config.boundary)
        d = sample_disorder(
            DisorderSpec(n, config.disorder, config.omega0, (int(config.seed), STREAMS["disorder"]))
        )
        self.disorder = d
        self.h_disorder = np.kron(ID2, np.diag(d).astype(complex))
        self.noise = synthesize_noise(config.noise) if config.noise is not None else None
        self.ls = collapse_operators(
            LindbladSpec(config.gamma1, config.gamma_phi), 1, local_dims=[2, n], sites=[0]
        )
        self.integrator = IntegratorConfig(rtol=config.rtol, atol=config.atol)

    def coin_assembly(self, action):
        """``H_c(t; a) + H_noise(t) + H_disorder`` for one coin action."""
        cfg = self.config
        window = pulses.PulseWindow(cfg.pulse_center(action), cfg.tau)
        amp = cfg.omega0 * action.theta / math.pi
        cx, cy = amp * math.cos(action.phi), amp * math.sin(action.phi)
        shape = cfg.shape
        noise = self.noise
        ops = [self.op_x, self.op_y]
        if noise is None:

            def coef(t):
                f = pulses.window_value(shape, window, t)
                return (cx * f, cy * f)

        else:
            ops.append(self.op_z)

            def coef(t):
                f = pulses.window_value(shape, window, t)
                return (cx * f, cy * f, noise(t))

        return assemble(HamiltonianPart(self.h_disorder, ops, coef))

    def step(self, rho, n, action):
        """Coin evolution over ``[n dt, (n+1) dt]`` followed by the shift."""
        cfg = self.config
        a, b = n * cfg.dt_step, (n + 1) * cfg.dt_step
        traj = evolve(rho, self.coin_assembly(action), self.ls, self.integrator, None, [a, b])
        rho = traj.states[-1]
        return self.shift @ rho @ self.shift.conj().T


def coin_step(rho, action, config, n=0, model=None):
    """One coin-plus-shift step of the walk at step index ``n``."""
    model = WalkModel(config) if model is None else model
    if not isinstance(action, CoinAction):
        action = CoinAction.from_array(action)
    return model.step(np.asarray(rho, dtype=complex), n, action)


def _normalized(rho):
    tr = np.trace(rho).real
    return rho / tr if tr > 0 else rho


def walk_metrics(config):
    """Per-step metric functions: target-site probability, EE, MI and trace.

    The target probability is the raw population, so probability lost at an
    ``as_written`` edge counts against it; the entropies use the renormalized state.
    """
    x_t = config.x_target
    half = config.half
    return {
        "tsp": lambda rho: float(site_probabilities(rho)[x_t + half]),
        "ee": lambda rho: walk_entanglement_entropy(_normalized(rho)),
        "mi": lambda rho: mutual_information(_normalized(rho)),
        "trace": lambda rho: float(np.trace(rho).real),
    }


def run_walk(policy, config, model=None):
    """Run ``config.n_steps`` coin-plus-shift steps.

    Parameters
    ----------
    policy : callable or array_like
        ``policy(n, history) -> CoinAction`` (or a length-3 array), where
        ``history`` is the list of states so far; an array of shape
        ``(n_steps, 3)`` is used as an open-loop action sequence.
    config : WalkConfig

    Returns
    -------
    Trajectory
        States at ``t = n dt`` for ``n = 0..n_steps`` with ``tsp``, ``ee``,
        ``mi`` and ``trace`` metrics; ``info["actions"]`` holds the actions.
    """
    model = WalkModel(config) if model is None else model
    if not callable(policy):
        seq = np.asarray(policy, dtype=float).reshape(config.n_steps, 3)
        policy = lambda n, history, _s=seq: _s[n]  # noqa: E731
    rho = initial_walk_state(config.n_sites)
    states = [rho]
    actions = []
    for n in range(config.n_steps):
        act = policy(n, states)
        if not isinstance(act, CoinAction):
            act = CoinAction.from_array(act)
        actions.append((act.a_amp, act.a_phi, act.a_timing))
        rho = model.step(rho, n, act)
        states.append(rho)
    times = np.arange(config.n_steps + 1) * config.dt_step
    traj = Trajectory(times, np.array(states), {}, {"actions": actions, "disorder": model.disorder.tolist()})
    for name, fn in walk_metrics(config).items():
        traj.add_metric(name, fn)
    return traj


def baseline_policy(n, history):
    """Constant action ``(0, 0, 0)``: ``theta = 3 pi / 2``, ``phi = 0``, centred pulse."""
    return CoinAction(0.0, 0.0, 0.0)


def target_probabilities(states, config):
    half = config.half
    return np.array([site_probabilities(r)[config.x_target + half] for r in states])


def walk_observation(states, n, config):
    """Observation at step ``n``: Re/Im of ``rho_n`` followed by six scalars.

    ``states`` holds ``rho_0 .. rho_n`` (at least). The scalars are
    ``2n/N - 1``, ``2 x_t/N_s - 1``, ``tanh((n - N/2)/(N/4))``, ``10 P_n``,
    ``20 (P_n - P_0)`` and ``10 mean(P_{n-2..n})``.
    """
    N = config.n_steps
    if not 0 <= n <= N:
        raise ValueError(f"step {n} outside [0, {N}]")
    rho = np.asarray(states[n])
    p = target_probabilities(states[: n + 1], config)
    scalars = [
        2.0 * n / N - 1.0,
        2.0 * config.x_target / config.n_sites - 1.0,
        math.tanh((n - N / 2.0) / (N / 4.0)),
        10.0 * p[n],
        20.0 * (p[n] - p[0]),
        10.0 * float(np.mean(p[max(0, n - 2): n + 1])),
    ]
    return np.concatenate([rho.real.ravel(), rho.imag.ravel(), scalars])


def walk_reward(site_probs, n, config):
    """Step reward of the transport task.

    Parameters
    ----------
    site_probs : sequence of arrays
        Position distributions ``p(., k)`` for ``k = 0..n``.
    n : int
        Current step, ``n >= 1``.
    config : WalkConfig
    """
    if n < 1:
        raise ValueError("the walk reward is defined for n >= 1")
    N = config.n_steps
    half = config.half
    x_t = config.x_target
    probs = [np.asarray(p, dtype=float) for p in site_probs[: n + 1]]
    tsp = np.array([p[x_t + half] for p in probs])
    p_n = tsp[n]
    labels = np.arange(-half, half + 1)
    r = 50.0 * p_n
    if p_n > 0.3:
        r += 100.0 * math.exp(5.0 * p_n)
    r -= 2.0 * float(np.sum(probs[n] * np.abs(labels - x_t)))
    hist = tsp[max(0, n - 5): n]
    r += 20.0 * max(0.0, p_n - float(np.mean(hist)))
    if n == N:
        r += 200.0 * p_n**2
    r += 10.0 * p_n * n / N
    r += 50.0 * (p_n - tsp[n - 1])
    last5 = tsp[n - 4: n + 1] if n >= 4 else None
    if last5 is not None and np.var(last5) < 1e-6 and p_n < 0.1:
        r -= 10.0
    return float(r)

"""Episodic control environments, task rewards and a cross-entropy optimizer.

Every environment follows one contract: ``reset(seed) -> observation`` and
``step(action) -> (observation, reward, done)``. Actions are given in the
physical units of the task and clipped to ``[low, high]``. The optimizer
searches the normalized box ``[-1, 1]^d`` and maps it onto those bounds.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import hamiltonians as ham
from . import protocols as proto
from . import pulses
from .dynamics import Trajectory, evolve
from .metrics import concurrence, site_probabilities
from .qstate import pauli_expectations

# ------------------------------------------------------------------ rewards

_PRES = dict(kind="preservation", w_dev=75.0, w_stab=10.0, w_cost=0.05, w_sm=0.02, dev_power=2,
             w_bonus=75.0, w_penalty=30.0)
_GEN = dict(kind="generation", w_shape=15.0, w_int=0.5, w_cost=0.05, w_sm=0.02,
            w_bonus=75.0, w_penalty=30.0)

REWARD_TABLES = {
    "preservation": _PRES,
    "generation": _GEN,
    "pwc_preservation": dict(_PRES, w_cost=0.01, w_sm=0.005, dev_power=1),
    "pwc_generation": dict(_GEN, w_shape=50.0, w_int=1.5, w_cost=0.01, w_sm=0.005),
    "polarized_simple": dict(kind="progress", scale=10.0, bonus=10.0, threshold=0.8),
    "stepwise_circular_preservation": _PRES,
    "stepwise_circular_generation": _GEN,
    "dd_sparse": dict(kind="sparse", sustain=0.01, proportional=False, threshold=0.9,
                      action_cost=0.001, final=10.0, replace_final=True),
    "floquet_dense": dict(kind="floquet", c1=20.0, power=3.0, c2=5.0, c_da=0.05,
                          bonus=500.0, penalty=100.0, target=0.95),
    "floquet_dense_body": dict(kind="sparse", sustain=0.01, proportional=True, threshold=0.9,
                               action_cost=0.001, final=10.0, replace_final=False),
    "gen_shaped": dict(kind="shaped", w_c=50.0, w_pen=0.005),
    "walk": dict(kind="walk"),
}


@dataclass(frozen=True)
class RewardSpec:
    """Task tag with its weight table.

    ``active_indices`` lists the action entries that count as "a pulse is
    applied" for the sparse rewards (entry 0 by default).
    """

    task: str
    weights: dict = field(default_factory=dict)
    active_indices: tuple = (0,)

    def __post_init__(self):
        if not self.weights:
            raise ValueError(f"no reward weights for task {self.task!r}")
        for k, v in self.weights.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"reward weight {k} is not finite")

    @classmethod
    def for_task(cls, task, variant="caption", active_indices=(0,)):
        key = task
        if task == "floquet_dense" and variant == "body":
            key = "floquet_dense_body"
        if key not in REWARD_TABLES:
            raise ValueError(f"unknown task {task!r}")
        return cls(task, dict(REWARD_TABLES[key]), tuple(active_indices))

    @property
    def kind(self):
        return self.weights["kind"]


def _l1(a):
    return float(np.sum(np.abs(a)))


def reward_step(spec, c_prev, c_next, c_initial, action, prev_action=None):
    """Per-step reward for the concurrence-based tasks.

    Parameters
    ----------
    spec : RewardSpec
    c_prev, c_next : float
        Entanglement before and after the step.
    c_initial : float
        Entanglement at the start of the episode.
    action, prev_action : array_like
        Current and previous actions (``prev_action=None`` means zeros).
    """
    w = spec.weights
    a = np.atleast_1d(np.asarray(action, dtype=float))
    a_prev = np.zeros_like(a) if prev_action is None else np.atleast_1d(np.asarray(prev_action, dtype=float))
    kind = w["kind"]
    if kind == "preservation":
        dev = c_initial - c_next
        dev_term = dev**2 if w["dev_power"] == 2 else dev
        return (
            -w["w_dev"] * dev_term
            - w["w_stab"] * (c_next - c_prev) ** 2
            - w["w_cost"] * _l1(a)
            - w["w_sm"] * _l1(a - a_prev)
        )
    if kind == "generation":
        return (
            w["w_shape"] * (c_next - c_prev) * (1.0 + 2.0 * c_next**2)
            + w["w_int"] * c_next**2
            - w["w_cost"] * _l1(a)
            - w["w_sm"] * _l1(a - a_prev)
        )
    if kind == "progress":
        return w["scale"] * (c_next - c_prev)
    if kind == "sparse":
        r = 0.0
        if c_next > w["threshold"]:
            r += w["sustain"] * (c_next if w["proportional"] else 1.0)
        if any(a[i] > 0 for i in spec.active_indices):
            r -= w["action_cost"]
        return r
    if kind == "floquet":
        return (
            w["c1"] * c_next ** w["power"]
            - w["c2"] * (1.0 - c_next) ** 2
            - w["c_da"] * float(np.linalg.norm(a - a_prev))
        )
    if kind == "shaped":
        return w["w_c"] * (c_next - c_prev) - w["w_pen"] * (a[0] / math.pi) ** 2
    raise ValueError(f"task {spec.task!r} has no concurrence step reward; use qwalk.walk_reward")


def reward_terminal(spec, c_final):
    """End-of-episode reward added on the final step."""
    w = spec.weights
    kind = w["kind"]
    if kind in ("preservation", "generation"):
        if c_final > 0.95:
            return w["w_bonus"] * c_final**4
        if c_final < 0.2:
            return -w["w_penalty"]
        return 0.0
    if kind == "progress":
        return w["bonus"] if c_final > w["threshold"] else 0.0
    if kind == "sparse":
        return w["final"] * c_final
    if kind == "floquet":
        return w["bonus"] if c_final > w["target"] else -w["penalty"]
    return 0.0


# ------------------------------------------------------------ environments


class EpisodicEnvironment:
    """Base class of the task environments.

    Subclasses set ``horizon``, ``low``, ``high`` and ``step_edges`` and
    implement ``_advance(k, action) -> Trajectory`` over step ``k``.
    """

    task = ""
    metric_name = "concurrence"

    def __init__(self, cfg, reward=None):
        self.cfg = cfg
        self.reward_spec = reward or RewardSpec.for_task(self.task, cfg.reward_variant)
        self.low = np.asarray(self.low, dtype=float)
        self.high = np.asarray(self.high, dtype=float)
        self.seed = cfg.seed
        self.k = 0

    @property
    def action_dim(self):
        return len(self.low)

    def scale_action(self, u):
        """Map ``u`` in ``[-1, 1]^d`` onto the physical bounds."""
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        return self.low + 0.5 * (u + 1.0) * (self.high - self.low)

    def unscale_action(self, a):
        span = np.where(self.high > self.low, self.high - self.low, 1.0)
        return 2.0 * (np.asarray(a, dtype=float) - self.low) / span - 1.0

    # -- state machine

    def reset(self, seed=None):
        self.seed = self.cfg.seed if seed is None else int(seed)
        self.run_cfg = replace(self.cfg, seed=self.seed)
        self._setup()
        self.k = 0
        self.segments = []
        self.actions = []
        self.rewards = []
        self.rho = self._initial_state()
        self.values = [self._metric(self.rho)]
        self.c_initial = self.values[0]
        return self.observation()

    def step(self, action):
        if self.k >= self.horizon:
            raise RuntimeError("episode is over; call reset()")
        a = np.clip(np.atleast_1d(np.asarray(action, dtype=float)), self.low, self.high)
        if a.shape != self.low.shape:
            raise ValueError(f"action of shape {a.shape}, expected {self.low.shape}")
        a = self._effective(self.k, a)
        seg = self._advance(self.k, a)
        self.segments.append(seg)
        self.rho = seg.states[-1]
        prev = self.actions[-1] if self.actions else None
        self.actions.append(a)
        c_prev = self.values[-1]
        c_next = self._metric(self.rho)
        self.values.append(c_next)
        self.k += 1
        done = self.k == self.horizon
        r = self._reward(c_prev, c_next, a, prev, done)
        self.rewards.append(r)
        return self.observation(), r, done

    def _reward(self, c_prev, c_next, a, prev, done):
        spec = self.reward_spec
        r = reward_step(spec, c_prev, c_next, self.c_initial, a, prev)
        if done:
            if spec.weights.get("replace_final"):
                r = reward_terminal(spec, c_next)
            else:
                r += reward_terminal(spec, c_next)
        return float(r)

    def trajectory(self):
        traj = Trajectory.concatenate(self.segments)
        traj.add_metric(self.metric_name, self._metric)
        traj.info["rewards"] = list(self.rewards)
        traj.info["actions"] = [list(map(float, a)) for a in self.actions]
        return traj

    # -- hooks

    def _setup(self):
        # The realization depends only on the seed, so repeated resets reuse it.
        if getattr(self, "_setup_seed", None) == self.seed:
            return
        self._setup_seed = self.seed
        self.noise = proto.make_noise(self.run_cfg)
        self.ls = proto.lindblad_ops(self.run_cfg)
        self.icfg = proto.integrator(self.run_cfg)

    def _initial_state(self):
        return proto.initial_state(self.run_cfg)

    def _metric(self, rho):
        return concurrence(rho)

    def _effective(self, k, a):
        return a

    def _evolve(self, assembly, a, b, n_out=1):
        grid = np.linspace(a, b, n_out + 1)
        return evolve(self.rho, assembly, self.ls, self.icfg, None, grid)

    def observation(self):
        return np.concatenate([self.rho.real.ravel(), self.rho.imag.ravel()])


def _step_edges(t_total, n_steps):
    return np.linspace(0.0, t_total, n_steps + 1)


class SinglePulseEnv(EpisodicEnvironment):
    """Single-pulse control inside the control window.

    Action ``(a_1 .. a_N, a_phi)`` in ``[-1, 1]``: drive amplitude of qubit
    ``k`` is ``a_k lambda_ref`` and the carrier phase is ``a_phi pi``, applied
    with the corrected drive and the modulated interaction. Outside the control
    window the action is ignored (recorded as zero) and the system evolves
    under its free Hamiltonian.
    """

    def __init__(self, cfg, task):
        self.task = task
        n = cfg.n_qubits
        self.low, self.high = -np.ones(n + 1), np.ones(n + 1)
        self.horizon = cfg.rl_steps
        self.edges = _step_edges(cfg.t_total, cfg.rl_steps)
        super().__init__(cfg)
        self.lambda_ref = max(abs(x) for x in cfg.amplitude) or 1.0

    def in_window(self, k):
        mid = 0.5 * (self.edges[k] + self.edges[k + 1])
        lo, hi = self.cfg.control_window
        return lo <= mid <= hi

    def _effective(self, k, a):
        return a if self.in_window(k) else np.zeros_like(a)

    def _advance(self, k, a):
        cfg = self.run_cfg
        n = cfg.n_qubits
        parts = [proto.system_part(cfg, self.noise)]
        if self.in_window(k):
            sched = pulses.EnvelopeSchedule(cfg.pulse_shape, [pulses.PulseWindow(cfg.t_c, cfg.duration)])
            drive = ham.DriveSpec(
                "corrected_xy", tuple(a[:n] * self.lambda_ref), cfg.omega_d, a[n] * math.pi, sched
            )
            parts.append(ham.build_interaction(ham.CouplingSpec(cfg.coupling, cfg.g), n, sched))
            parts.append(ham.build_drive(drive, proto.error_spec(cfg), n))
        return self._evolve(ham.assemble(*parts), self.edges[k], self.edges[k + 1])


class ShapedScheduleEnv(EpisodicEnvironment):
    """Per-step window amplitudes of a fixed multi-window protocol.

    The action holds one amplitude in ``[-1, 1]`` per window; it scales the
    drive of that window during the current step. Used for the
    piecewise-constant (superposed I/Q) and the step-wise circular tasks.
    """

    def __init__(self, cfg, task, kind):
        self.task = task
        self.kind = kind
        m = cfg.n_pulses
        self.low, self.high = -np.ones(m), np.ones(m)
        self.horizon = cfg.rl_steps
        self.edges = _step_edges(cfg.t_total, cfg.rl_steps)
        super().__init__(cfg)

    def _advance(self, k, a):
        assembly, _ = proto.shaped_pulse_assembly(self.kind, self.run_cfg, self.noise, drive_scales=a)
        return self._evolve(assembly, self.edges[k], self.edges[k + 1])


class PolarizedSimpleEnv(EpisodicEnvironment):
    """Single-shot choice of the three linear-polarization window amplitudes.

    One step evolves the whole episode; its reward is the sum of the per-grid
    step rewards ``10 (C_{t+1} - C_t)`` plus the terminal bonus.
    """

    task = "polarized_simple"

    def __init__(self, cfg):
        m = cfg.n_pulses
        self.low, self.high = -np.ones(m), np.ones(m)
        self.horizon = 1
        super().__init__(cfg)

    def _advance(self, k, a):
        assembly, _ = proto.shaped_pulse_assembly("sequential_linear", self.run_cfg, self.noise, drive_scales=a)
        return evolve(self.rho, assembly, self.ls, self.icfg, None, self.run_cfg.grid)

    def _reward(self, c_prev, c_next, a, prev, done):
        seg = self.segments[-1]
        cs = np.array([concurrence(r) for r in seg.states])
        r = sum(reward_step(self.reward_spec, x, y, self.c_initial, a) for x, y in zip(cs, cs[1:]))
        return float(r + reward_terminal(self.reward_spec, c_next))


class DDEnv(EpisodicEnvironment):
    """Sparse global-pulse decoupling.

    Step ``k`` lasts ``tau_p m_free``. Action ``(theta, phi)`` with
    ``theta`` in ``[0, 2 pi]``: if ``theta > 0`` a pulse with ``Omega =
    theta f / tau_p`` occupies the first ``tau_p`` of the step. The
    observation holds the ``4^N - 1`` Pauli expectations and ``t / T``.
    """

    task = "dd_sparse"

    def __init__(self, cfg):
        self.low = np.array([0.0, -math.pi])
        self.high = np.array([2.0 * math.pi, math.pi])
        self.horizon = cfg.dd_steps
        self.edges = np.arange(cfg.dd_steps + 1) * cfg.tau_step
        super().__init__(cfg)

    def _advance(self, k, a):
        cfg = self.run_cfg
        t0 = self.edges[k]
        if a[0] > 0:
            times, phases, thetas = [t0 + 0.5 * cfg.tau_p], [a[1]], [a[0] / cfg.tau_p]
        else:
            times, phases, thetas = [], [], []
        assembly = proto.dd_assembly(cfg, times, phases, thetas, self.noise, first_index=k)
        return self._evolve(assembly, t0, self.edges[k + 1])

    def observation(self):
        return np.concatenate([pauli_expectations(self.rho), [self.edges[self.k] / self.edges[-1]]])


class FloquetEnv(EpisodicEnvironment):
    """Per-step harmonic parameters of the Floquet drive.

    Action ``(A_i, phi_i, nu_i)`` for each harmonic with ``A`` in ``[0, 2 pi]``,
    ``phi`` in ``[-pi, pi]`` and ``nu`` in ``[0.5, 1.5]``; harmonic ``i`` has
    amplitude ``w_i A_i``. The observation concatenates the Pauli vector,
    ``(k/N, delta omega(t), f)``, the two previous actions and
    ``(C_k, C_{k-1}, C_k - C_{k-1})``.
    """

    task = "floquet_dense"

    def __init__(self, cfg):
        nh = len(cfg.harmonic_weights)
        self.low = np.tile([0.0, -math.pi, 0.5], nh)
        self.high = np.tile([2.0 * math.pi, math.pi, 1.5], nh)
        self.horizon = cfg.floquet_steps
        self.edges = _step_edges(cfg.t_total, cfg.floquet_steps)
        amp_idx = tuple(range(0, 3 * nh, 3))
        super().__init__(cfg, RewardSpec.for_task("floquet_dense", cfg.reward_variant, amp_idx))

    def harmonics(self, a):
        w = self.cfg.harmonic_weights
        return tuple(ham.Harmonic(w[i] * a[3 * i], a[3 * i + 1], a[3 * i + 2]) for i in range(len(w)))

    def _advance(self, k, a):
        assembly = proto.floquet_assembly(self.run_cfg, self.harmonics(a), self.noise)
        return self._evolve(assembly, self.edges[k], self.edges[k + 1])

    def observation(self):
        cfg = self.cfg
        t = self.edges[self.k]
        period = ham.floquet_period(cfg.floquet_omega)
        local = math.fmod(t, period)
        f = pulses.eval_envelope(cfg.pulse_shape, (local - 0.5 * period) / cfg.floquet_env, cfg.floquet_env)
        dw = self.noise(t) if self.noise is not None else 0.0
        zero = np.zeros(self.action_dim)
        a1 = self.actions[-1] if len(self.actions) >= 1 else zero
        a2 = self.actions[-2] if len(self.actions) >= 2 else zero
        c_now = self.values[-1]
        c_before = self.values[-2] if len(self.values) >= 2 else c_now
        return np.concatenate([
            pauli_expectations(self.rho),
            [self.k / self.horizon, dw, float(f)],
            a1, a2,
            [c_now, c_before, c_now - c_before],
        ])


class GenerationEnv(EpisodicEnvironment):
    """Local pulse of area ``theta`` in ``[0, pi]`` and phase ``phi`` on qubit 0 each step.

    The step dynamics are those of :func:`protocols.generation_step_assembly`,
    so an all-zero action sequence reproduces the no-control protocol.
    """

    task = "gen_shaped"

    def __init__(self, cfg):
        self.low = np.array([0.0, -math.pi])
        self.high = np.array([math.pi, math.pi])
        self.horizon = cfg.gen_steps
        super().__init__(cfg)
        self.area = proto.generation_pulse_area(cfg)
        self.per = proto.generation_grid_per_step(cfg)

    def _advance(self, k, a):
        cfg = self.run_cfg
        assembly = proto.generation_step_assembly(cfg, k, a[0], a[1], self.noise, self.area)
        t0 = k * cfg.step_time
        return self._evolve(assembly, t0, t0 + cfg.step_time, self.per)

    def observation(self):
        return np.concatenate([pauli_expectations(self.rho), [self.k / self.horizon]])


class WalkEnv(EpisodicEnvironment):
    """Coin control of the quantum walk; the tracked value is the target-site probability."""

    task = "walk"
    metric_name = "tsp"

    def __init__(self, cfg):
        from . import qwalk

        self._qwalk = qwalk
        self.low, self.high = -np.ones(3), np.ones(3)
        self.horizon = cfg.walk_steps
        super().__init__(cfg)

    def _setup(self):
        if getattr(self, "_setup_seed", None) == self.seed:
            return
        self._setup_seed = self.seed
        qw = self._qwalk
        self.wcfg = qw.WalkConfig.from_scenario(self.run_cfg)
        self.model = qw.WalkModel(self.wcfg)

    def _initial_state(self):
        return self._qwalk.initial_walk_state(self.wcfg.n_sites)

    def reset(self, seed=None):
        obs = super().reset(seed)
        self.states = [self.rho]
        self.site_probs = [site_probabilities(self.rho)]
        return self._qwalk.walk_observation(self.states, 0, self.wcfg)

    def _metric(self, rho):
        return float(site_probabilities(rho)[self.wcfg.x_target + self.wcfg.half])

    def _advance(self, k, a):
        qw = self._qwalk
        rho = self.model.step(self.rho, k, qw.CoinAction.from_array(a))
        self.states.append(rho)
        self.site_probs.append(site_probabilities(rho))
        dt = self.wcfg.dt_step
        return Trajectory(np.array([k * dt, (k + 1) * dt]), np.array([self.rho, rho]))

    def _reward(self, c_prev, c_next, a, prev, done):
        return self._qwalk.walk_reward(self.site_probs, self.k, self.wcfg)

    def observation(self):
        if not hasattr(self, "states"):
            return None
        return self._qwalk.walk_observation(self.states, self.k, self.wcfg)

    def trajectory(self):
        traj = super().trajectory()
        for name, fn in self._qwalk.walk_metrics(self.wcfg).items():
            traj.add_metric(name, fn)
        return traj


def make_environment(task, cfg):
    """Environment of ``task`` built from scenario ``cfg``."""
    if task in ("preservation", "generation"):
        return SinglePulseEnv(cfg, task)
    if task in ("pwc_preservation", "pwc_generation"):
        return ShapedScheduleEnv(cfg, task, "multi_pulse")
    if task in ("stepwise_circular_preservation", "stepwise_circular_generation"):
        return ShapedScheduleEnv(cfg, task, "sequential_circular")
    if task == "polarized_simple":
        return PolarizedSimpleEnv(cfg)
    if task == "dd_sparse":
        return DDEnv(cfg)
    if task == "floquet_dense":
        return FloquetEnv(cfg)
    if task == "gen_shaped":
        return GenerationEnv(cfg)
    if task == "walk":
        return WalkEnv(cfg)
    raise ValueError(f"unknown task {task!r}")


# ------------------------------------------------------------------ rollouts


@dataclass
class Episode:
    """Recorded rollout: observations, actions, rewards and the trajectory."""

    observations: list
    actions: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    trajectory: Trajectory

    @property
    def total_return(self):
        return float(np.sum(self.rewards))

    def csv_rows(self):
        """Rows ``(step, action..., reward, value)`` for the episode log."""
        return [
            [k, *map(float, a), float(r), float(v)]
            for k, (a, r, v) in enumerate(zip(self.actions, self.rewards, self.values[1:]))
        ]


def rollout(env, actions, seed=None, record_trajectory=True):
    """Play a fixed action sequence (physical units) through ``env``."""
    obs = [env.reset(seed)]
    actions = np.asarray(actions, dtype=float).reshape(env.horizon, env.action_dim)
    for a in actions:
        o, _, _ = env.step(a)
        obs.append(o)
    traj = env.trajectory() if record_trajectory else None
    return Episode(obs, np.array(env.actions), np.array(env.rewards), np.array(env.values), traj)


def episode_return(env, actions, seed=None):
    env.reset(seed)
    total = 0.0
    for a in np.asarray(actions, dtype=float).reshape(env.horizon, env.action_dim):
        total += env.step(a)[1]
    return total


# ------------------------------------------------------------------- CEM


@dataclass(frozen=True)
class CEMConfig:
    """Cross-entropy method settings (normalized action space)."""

    population: int = 24
    elite_frac: float = 0.25
    iterations: int = 15
    sigma0: float = 0.5
    sigma_floor: float = 0.02
    alpha: float = 0.7
    seed: int | tuple = 0

    def __post_init__(self):
        if not 0 < self.elite_frac <= 1:
            raise ValueError("elite_frac must lie in (0, 1]")
        if self.population < 2 or self.iterations < 1:
            raise ValueError("population must be at least 2 and iterations at least 1")
        if not (self.sigma0 > 0 and self.sigma_floor >= 0 and 0 < self.alpha <= 1):
            raise ValueError("need sigma0 > 0, sigma_floor >= 0 and 0 < alpha <= 1")

    @classmethod
    def from_scenario(cls, cfg):
        return cls(cfg.cem_population, cfg.cem_elite_frac, cfg.cem_iterations, cfg.cem_sigma0,
                   cfg.cem_sigma_floor, cfg.cem_alpha, proto.substream(cfg.seed, "cem"))


@dataclass
class CEMResult:
    best_actions: np.ndarray
    best_return: float
    curve: np.ndarray
    mean_history: list


def cem_optimize(env, config, init_mean=None, seed=None):
    """Diagonal-Gaussian cross-entropy search over a whole action sequence.

    Parameters
    ----------
    env : EpisodicEnvironment
        Any object with ``horizon``, ``action_dim``, ``scale_action``,
        ``reset`` and ``step``.
    config : CEMConfig
    init_mean : array_like, optional
        Initial mean in normalized units, shape ``(horizon, action_dim)``;
        defaults to the all-zero physical action (no control), clipped to the box.
    seed : int, optional
        Episode seed passed to ``env.reset`` (the noise realization).

    Returns
    -------
    CEMResult
        Best action sequence in physical units, its return, the best-so-far
        return after every iteration (non-decreasing), and the means.
    """
    shape = (env.horizon, env.action_dim)
    dim = shape[0] * shape[1]
    if dim > 10_000:
        raise ValueError("horizon * action_dim exceeds 10^4")
    rng = np.random.default_rng(config.seed)
    if init_mean is None:
        zero = np.clip(env.unscale_action(np.zeros(shape[1])), -1.0, 1.0)
        mu = np.tile(zero, shape[0])
    else:
        mu = np.asarray(init_mean, dtype=float).reshape(dim).copy()
    sigma = np.full(dim, config.sigma0)
    n_elite = max(1, int(math.ceil(config.elite_frac * config.population)))

    def score(u):
        acts = np.array([env.scale_action(x) for x in u.reshape(shape)])
        return episode_return(env, acts, seed), acts

    best_r, best_a = score(np.clip(mu, -1, 1))
    curve, means = [], []
    for _ in range(config.iterations):
        pop = np.clip(mu + sigma * rng.standard_normal((config.population, dim)), -1.0, 1.0)
        scores = np.empty(config.population)
        for i, u in enumerate(pop):
            r, acts = score(u)
            scores[i] = r
            if r > best_r:
                best_r, best_a = r, acts
        elite = pop[np.argsort(-scores, kind="stable")[:n_elite]]
        mu = config.alpha * elite.mean(axis=0) + (1 - config.alpha) * mu
        sigma = np.maximum(config.alpha * elite.std(axis=0) + (1 - config.alpha) * sigma, config.sigma_floor)
        means.append(mu.copy())
        curve.append(best_r)
    return CEMResult(best_a, float(best_r), np.array(curve), means)

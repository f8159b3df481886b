"""Named control protocols as runnable scenarios.

Every protocol maps a :class:`~pulsebench.config.ScenarioConfig` to a
:class:`~pulsebench.dynamics.Trajectory` with a ``concurrence`` series (and a
``fidelity`` series for the preservation benchmarks).
"""

import math

import numpy as np

from . import hamiltonians as ham
from . import pulses
from .dynamics import IntegratorConfig, LindbladSpec, Trajectory, collapse_operators, evolve, evolve_piecewise
from .metrics import concurrence, fidelity_pure
from .noise import ChebyshevNoise, LorentzianNoiseSpec, synthesize_noise
from .qstate import SX, SY, InitialStateSpec, ghz_ket, make_initial_state, projector

# Independent random streams derived from the scenario seed.
STREAMS = {
    "noise": 1,
    "pulse": 2,
    "initial": 3,
    "qec": 4,
    "trials": 5,
    "disorder": 6,
    "cem": 7,
}

DETERMINISTIC = ("single_pulse", "multi_pulse", "sequential_linear", "sequential_circular")
DD_KINDS = ("dcg2", "udd16", "carr_purcell", "hybrid_qec_dd")
FLOQUET_KINDS = ("floquet_reference", "floquet_optimized_fixed", "floquet_lyapunov")
GENERATION_KINDS = ("gen_no_control", "gen_heuristic", "gen_knill_dd")


def substream(seed, name):
    """Seed tuple of the named stream; ``numpy.random.default_rng`` accepts it directly."""
    return (int(seed), STREAMS[name])


# ------------------------------------------------------------------ helpers


def make_noise(cfg):
    """Frozen Lorentzian noise trace of the scenario, or ``None`` when disabled.

    With ``cfg.noise_cache`` the trace is wrapped in its piecewise Chebyshev
    interpolant, which agrees to about 1e-14 and is several times cheaper.
    """
    if not cfg.noise_enabled or cfg.s0 == 0:
        return None
    spec = LorentzianNoiseSpec(
        cfg.m, cfg.s0, cfg.omega_c, cfg.gamma_hwhm, cfg.omega_min, cfg.omega_max,
        substream(cfg.seed, "noise"),
    )
    trace = synthesize_noise(spec)
    return ChebyshevNoise(trace) if cfg.noise_cache else trace


def initial_state(cfg):
    spec = InitialStateSpec.from_label(
        cfg.initial_state,
        epsilon=cfg.initial_epsilon,
        seed=substream(cfg.seed, "initial"),
        n_qubits=cfg.n_qubits,
    )
    return make_initial_state(spec)


def target_ket(cfg):
    """Ideal maximally entangled state of the preservation tasks (Bell for two qubits)."""
    return ghz_ket(cfg.n_qubits)


def lindblad_ops(cfg):
    return collapse_operators(LindbladSpec(cfg.gamma1, cfg.gamma_phi), cfg.n_qubits)


def error_spec(cfg):
    return ham.ErrorSpec(
        detuning=cfg.detuning,
        amplitude_error=cfg.amplitude_error,
        stochastic_pulse_error=cfg.pulse_error_sigma > 0,
        pulse_error_sigma=cfg.pulse_error_sigma,
        seed=substream(cfg.seed, "pulse"),
    )


def integrator(cfg):
    return IntegratorConfig(rtol=cfg.rtol, atol=cfg.atol)


def system_part(cfg, noise):
    traces = [None] * cfg.n_qubits
    if noise is not None:
        for q in cfg.noise_qubits:
            traces[q] = noise
    return ham.build_static(ham.SystemSpec(cfg.omega_q, tuple(traces)))


def metric_fns(cfg, fidelity=False):
    out = {}
    if cfg.n_qubits == 2:
        out["concurrence"] = concurrence
    if fidelity:
        psi = target_ket(cfg)
        out["fidelity"] = lambda rho: fidelity_pure(rho, psi)
    return out


def _zero_part(n):
    return ham.HamiltonianPart(np.zeros((2**n, 2**n), dtype=complex))


# --------------------------------------------------------- elementary rules


def udd_timings(n_pulses, t_total):
    """Uhrig pulse times ``t_k = T sin^2(pi k / (2 (N_p + 1)))`` for ``k = 1..N_p``."""
    if n_pulses < 1 or not t_total > 0:
        raise ValueError("udd_timings needs n_pulses >= 1 and t_total > 0")
    k = np.arange(1, n_pulses + 1)
    return t_total * np.sin(np.pi * k / (2 * (n_pulses + 1))) ** 2


def qec_correct(rho, rho_ideal, s):
    """Convex correction ``((1-s) rho + s rho_ideal) / Tr(...)``."""
    if not 0 <= s <= 1:
        raise ValueError("correction strength s must lie in [0, 1]")
    if s == 1:
        return np.array(rho_ideal, dtype=complex)
    mixed = (1.0 - s) * np.asarray(rho, dtype=complex) + s * np.asarray(rho_ideal, dtype=complex)
    return mixed / np.trace(mixed).real


def lyapunov_phase(rho, rho_target, o_x, o_y, tol=1e-12):
    """Feedback phase ``atan2(-Re Tr[M O_y], -Re Tr[M O_x])`` with ``M = i[rho, rho_target]``.

    Returns 0 when both traces are below ``tol`` in magnitude. This is always
    the case for a GHZ target with the pair operators: the target is an
    eigenstate of both, so ``[rho_target, O] = 0`` and both traces vanish.
    """
    m = 1j * (rho @ rho_target - rho_target @ rho)
    tx = np.trace(m @ o_x).real
    ty = np.trace(m @ o_y).real
    if abs(tx) < tol and abs(ty) < tol:
        return 0.0
    return math.atan2(-ty, -tx)


# ------------------------------------------------ shaped-pulse protocols


def deterministic_schedule(kind, cfg, drive_scales=None):
    """Envelope schedules and drive specs of the shaped-pulse protocols.

    Parameters
    ----------
    kind : str
        ``single_pulse``, ``multi_pulse``, ``sequential_linear`` or
        ``sequential_circular``.
    cfg : ScenarioConfig
    drive_scales : sequence of float, optional
        Per-window multipliers of the drive amplitude (the interaction envelope
        is unaffected). Used by the piecewise-constant control tasks.

    Returns
    -------
    dict
        ``interaction``: EnvelopeSchedule, ``drives``: list of DriveSpec,
        ``windows``: the pulse windows in time order.
    """
    shape = cfg.pulse_shape
    n_win = 1 if kind == "single_pulse" else cfg.n_pulses
    if kind == "sequential_circular":
        n_win = cfg.n_pulses
    windows = [pulses.PulseWindow(cfg.t_c + k * cfg.spacing, cfg.duration) for k in range(n_win)]
    scales = [1.0] * n_win if drive_scales is None else [float(x) for x in drive_scales]
    if len(scales) != n_win:
        raise ValueError(f"{len(scales)} drive scales for {n_win} windows")
    scaled = [pulses.PulseWindow(w.center, w.duration, s) for w, s in zip(windows, scales)]
    if kind == "single_pulse":
        inter = pulses.EnvelopeSchedule(shape, windows, pulses.SUPERPOSE)
        drive_sched = pulses.EnvelopeSchedule(shape, scaled, pulses.SUPERPOSE)
        drives = [ham.DriveSpec("corrected_xy", cfg.amplitude, cfg.omega_d, cfg.phase, drive_sched)]
    elif kind == "multi_pulse":
        inter = pulses.EnvelopeSchedule(shape, windows, pulses.SUPERPOSE)
        drive_sched = pulses.EnvelopeSchedule(shape, scaled, pulses.SUPERPOSE)
        drives = [ham.DriveSpec("iq", cfg.amplitude, cfg.omega_d, cfg.phase, drive_sched)]
    elif kind in ("sequential_linear", "sequential_circular"):
        inter = pulses.EnvelopeSchedule(shape, windows, pulses.SEQUENTIAL)
        fams = ("linear_x", "linear_y", "linear_z") if kind == "sequential_linear" else ("lcp", "rcp")
        drives = []
        for k, w in enumerate(scaled):
            fam = fams[k % len(fams)]
            amps = cfg.amplitude
            if fam == "linear_z":
                amps = tuple(cfg.omega_z if a else 0.0 for a in cfg.amplitude)
            sched = pulses.EnvelopeSchedule(shape, [w], pulses.SEQUENTIAL)
            drives.append(ham.DriveSpec(fam, amps, cfg.omega_d, 0.0, sched))
    else:
        raise ValueError(f"{kind!r} is not a shaped-pulse protocol")
    return {"interaction": inter, "drives": drives, "windows": windows}


def shaped_pulse_assembly(kind, cfg, noise, drive_scales=None):
    sched = deterministic_schedule(kind, cfg, drive_scales)
    n = cfg.n_qubits
    parts = [
        system_part(cfg, noise),
        ham.build_interaction(ham.CouplingSpec(cfg.coupling, cfg.g), n, sched["interaction"]),
    ]
    errors = error_spec(cfg)
    parts += [ham.build_drive(d, errors, n) for d in sched["drives"]]
    return ham.assemble(*parts), sched


def run_shaped_pulse(kind, cfg):
    noise = make_noise(cfg)
    assembly, sched = shaped_pulse_assembly(kind, cfg, noise)
    traj = evolve(initial_state(cfg), assembly, lindblad_ops(cfg), integrator(cfg), metric_fns(cfg), cfg.grid)
    traj.info["n_pulses"] = len(sched["windows"])
    traj.info["windows"] = [(w.center, w.duration) for w in sched["windows"]]
    return traj


# --------------------------------------------------- decoupling protocols


def dd_pulse_plan(kind, cfg):
    """Pulse centres and phases of the decoupling benchmarks."""
    t = cfg.t_total
    if kind == "dcg2":
        return np.array([t / 3.0, 2.0 * t / 3.0]), np.array([0.0, math.pi / 2])
    if kind == "udd16":
        times = udd_timings(16, t)
        phases = np.array([0.0 if k % 2 else math.pi / 2 for k in range(1, 17)])
        return times, phases
    if kind in ("carr_purcell", "hybrid_qec_dd"):
        n_cycles = int(round(t / cfg.cp_cycle))
        times = (np.arange(n_cycles) + 0.5) * cfg.cp_cycle
        return times, np.full(n_cycles, math.pi / 2)
    raise ValueError(f"{kind!r} is not a decoupling protocol")


def dd_assembly(cfg, times, phases, thetas, noise, first_index=0):
    """Hamiltonian of the global-pulse decoupling model.

    Pulses are windows of length ``tau_p`` centred on ``times``; during a pulse
    the YY coupling is ``g f`` and outside it is ``g``.
    """
    n = cfg.n_qubits
    errors = error_spec(cfg)
    coupling = ham.CouplingSpec("yy", cfg.g)
    parts = [system_part(cfg, noise)]
    if len(times):
        windows = [pulses.PulseWindow(float(tc), cfg.tau_p) for tc in times]
        sched = pulses.EnvelopeSchedule(cfg.pulse_shape, windows, pulses.SEQUENTIAL)
        parts.append(ham.build_interaction(coupling, n, sched, outside=1.0))
        spec = ham.DriveSpec(
            "global_dd",
            envelope=sched,
            pulse_amplitudes=tuple(float(x) for x in thetas),
            pulse_phases=tuple(float(x) for x in phases),
            first_pulse_index=first_index,
        )
        parts.append(ham.build_drive(spec, errors, n))
    else:
        parts.append(ham.build_interaction(coupling, n))
        if errors.detuning:
            parts.append(ham.constant_part(errors.detuning * ham.tensor_embed(ham.SZ, 0, n)))
    return ham.assemble(*parts)


def nominal_pi_amplitude(cfg):
    """In-pulse prefactor ``theta = pi / tau_p`` so that ``Omega/2 = pi f / (2 tau_p)``."""
    return math.pi / cfg.tau_p


def _hybrid_grid(cfg):
    edges = np.arange(int(round(cfg.t_total / cfg.cp_cycle)) + 1) * cfg.cp_cycle
    merged = np.union1d(np.round(cfg.grid, 12), np.round(edges, 12))
    return merged, edges


def run_dd(kind, cfg):
    noise = make_noise(cfg)
    times, phases = dd_pulse_plan(kind, cfg)
    thetas = np.full(len(times), nominal_pi_amplitude(cfg))
    rho0 = initial_state(cfg)
    ls = lindblad_ops(cfg)
    metrics = metric_fns(cfg, fidelity=True)
    if kind != "hybrid_qec_dd":
        assembly = dd_assembly(cfg, times, phases, thetas, noise)
        traj = evolve(rho0, assembly, ls, integrator(cfg), metrics, cfg.grid)
    else:
        traj = _run_hybrid(cfg, times, phases, thetas, noise, rho0, ls, metrics)
    traj.info["n_pulses"] = len(times)
    traj.info["pulse_times"] = [float(x) for x in times]
    return traj


def _run_hybrid(cfg, times, phases, thetas, noise, rho0, ls, metrics):
    grid, edges = _hybrid_grid(cfg)
    assembly = dd_assembly(cfg, times, phases, thetas, noise)
    psi = target_ket(cfg)
    rho_ideal = projector(psi)
    rng = np.random.default_rng(substream(cfg.seed, "qec"))
    counter = {"qec_applied": 0}

    def correction(rho):
        # The draw happens for every cycle so that the stream stays aligned.
        u = rng.random()
        if u >= cfg.p_qec:
            return rho
        if cfg.qec_rule == "constant":
            s = cfg.s_max
        else:
            s = min(cfg.s_max, max(0.0, cfg.s_max * (1.0 - fidelity_pure(rho, psi))))
        counter["qec_applied"] += 1
        return qec_correct(rho, rho_ideal, s)

    segments, maps = [], []
    for a, b in zip(edges, edges[1:]):
        inside = grid[(grid > a + 1e-12) & (grid < b - 1e-12)]
        seg_grid = np.concatenate([[a], inside, [b]])
        segments.append((assembly, ls, seg_grid))
        maps.append(correction)
    traj = evolve_piecewise(rho0, segments, maps, integrator(cfg), metrics)
    traj.info.update(counter)
    traj.info["cycle_edges"] = [float(x) for x in edges]
    return traj


# ------------------------------------------------------ Floquet protocols


def floquet_operators(n_qubits):
    return ham.pair_sum(SX, n_qubits), ham.pair_sum(SY, n_qubits)


def floquet_assembly(cfg, harmonics, noise):
    """``H_sys + g sum YY + Floquet drive + H_err`` with the noise inside ``H_err``."""
    n = cfg.n_qubits
    errors = error_spec(cfg)
    env = pulses.EnvelopeSchedule(cfg.pulse_shape, [pulses.PulseWindow(0.0, cfg.floquet_env)])
    drive = ham.DriveSpec(
        "floquet", (cfg.a_pulse,), cfg.floquet_omega, 0.0, env, harmonics=tuple(harmonics)
    )
    parts = [
        ham.build_static(ham.SystemSpec(cfg.omega_q)),
        ham.build_interaction(ham.CouplingSpec("yy", cfg.g), n),
        ham.build_drive(drive, errors, n),
        ham.build_error(errors, n, noise),
    ]
    return ham.assemble(*parts)


def reference_harmonics(cfg):
    return (ham.Harmonic(cfg.harmonic_weights[0], 0.0, 1.0),)


def sample_floquet_trial(rng, cfg):
    """One uniformly drawn parameter set of the optimized-fixed search."""
    out = []
    for w in cfg.harmonic_weights:
        a = rng.uniform(0.5 * cfg.a_pulse, 2.0 * cfg.a_pulse)
        phi = rng.uniform(-math.pi, math.pi)
        nu = rng.uniform(0.5, 1.5)
        out.append(ham.Harmonic(w * a, phi, nu))
    return tuple(out)


def run_floquet(kind, cfg):
    noise = make_noise(cfg)
    rho0 = initial_state(cfg)
    ls = lindblad_ops(cfg)
    metrics = metric_fns(cfg, fidelity=True)
    icfg = integrator(cfg)
    if kind == "floquet_reference":
        traj = evolve(rho0, floquet_assembly(cfg, reference_harmonics(cfg), noise), ls, icfg, metrics, cfg.grid)
        return traj
    if kind == "floquet_optimized_fixed":
        rng = np.random.default_rng(substream(cfg.seed, "trials"))
        best, best_c, best_h, finals = None, -1.0, None, []
        for _ in range(cfg.floquet_trials):
            harm = sample_floquet_trial(rng, cfg)
            traj = evolve(rho0, floquet_assembly(cfg, harm, noise), ls, icfg, metrics, cfg.grid)
            c = float(traj.metrics["concurrence"][-1])
            finals.append(c)
            if c > best_c:
                best, best_c, best_h = traj, c, harm
        best.info["trial_finals"] = finals
        best.info["harmonics"] = [(h.amplitude, h.phase, h.nu) for h in best_h]
        return best
    if kind == "floquet_lyapunov":
        psi = target_ket(cfg)
        rho_t = projector(psi)
        o_x, o_y = floquet_operators(cfg.n_qubits)
        grid = cfg.grid
        rho = rho0
        parts, phases = [], []
        for a, b in zip(grid, grid[1:]):
            phi = lyapunov_phase(rho, rho_t, o_x, o_y)
            phases.append(phi)
            harm = (ham.Harmonic(cfg.harmonic_weights[0], phi, 1.0),)
            seg = evolve(rho, floquet_assembly(cfg, harm, noise), ls, icfg, None, [a, b])
            rho = seg.states[-1]
            parts.append(seg)
        traj = Trajectory.concatenate(parts)
        for name, fn in metrics.items():
            traj.add_metric(name, fn)
        traj.info["phases"] = phases
        return traj
    raise ValueError(f"{kind!r} is not a Floquet protocol")


# ---------------------------------------------------- generation protocols


def generation_pulse_area(cfg):
    """``int |f| dt`` over one pulse window, the area-to-amplitude conversion factor."""
    return pulses.envelope_area(cfg.pulse_shape, cfg.t_p, absolute=True)


def generation_step_assembly(cfg, k, theta, phi, noise, area=None):
    """Hamiltonian of generation step ``k``: one local pulse of area ``theta`` on qubit 0.

    The pulse occupies ``[t_k, t_k + T_p]`` with ``t_k = k * step_time``;
    during it the YY coupling is ``g f``, outside it ``g``.
    """
    n = cfg.n_qubits
    area = generation_pulse_area(cfg) if area is None else area
    t_k = k * cfg.step_time
    window = pulses.PulseWindow(t_k + 0.5 * cfg.t_p, cfg.t_p)
    sched = pulses.EnvelopeSchedule(cfg.pulse_shape, [window], pulses.SEQUENTIAL)
    errors = error_spec(cfg)
    drive = ham.DriveSpec(
        "local_axis",
        envelope=sched,
        pulse_amplitudes=(theta / area,),
        pulse_phases=(phi,),
        target_qubit=0,
        first_pulse_index=k,
    )
    parts = [
        system_part(cfg, noise),
        ham.build_interaction(ham.CouplingSpec("yy", cfg.g), n, sched, outside=1.0),
        ham.build_drive(drive, errors, n),
        ham.build_error(ham.ErrorSpec(detuning=cfg.detuning), n),
    ]
    return ham.assemble(*parts)


def generation_actions(kind, cfg):
    """Per-step ``(theta, phi)`` of the generation benchmarks."""
    n = cfg.gen_steps
    acts = np.zeros((n, 2))
    if kind == "gen_no_control":
        return acts
    if kind == "gen_heuristic":
        acts[:, 0] = [(-1) ** k * math.pi / 2 for k in range(n)]
        return acts
    if kind == "gen_knill_dd":
        for j in range(cfg.knill_pulses):
            k = int(math.floor((j + 0.5) * n / cfg.knill_pulses))
            acts[k] = (math.pi, 0.0 if j % 2 == 0 else math.pi / 2)
        return acts
    raise ValueError(f"{kind!r} is not a generation protocol")


def generation_grid_per_step(cfg):
    per = (cfg.n_grid - 1) / cfg.gen_steps
    return max(1, int(round(per)))


def run_generation_actions(cfg, actions, rho0=None, noise=None):
    """Evolve the generation model step by step under ``actions[k] = (theta_k, phi_k)``."""
    noise = make_noise(cfg) if noise is None else noise
    rho = initial_state(cfg) if rho0 is None else rho0
    ls = lindblad_ops(cfg)
    icfg = integrator(cfg)
    area = generation_pulse_area(cfg)
    per = generation_grid_per_step(cfg)
    parts = []
    for k, (theta, phi) in enumerate(np.asarray(actions, dtype=float)):
        t_k = k * cfg.step_time
        grid = np.linspace(t_k, t_k + cfg.step_time, per + 1)
        seg = evolve(rho, generation_step_assembly(cfg, k, theta, phi, noise, area), ls, icfg, None, grid)
        rho = seg.states[-1]
        parts.append(seg)
    traj = Trajectory.concatenate(parts)
    for name, fn in metric_fns(cfg).items():
        traj.add_metric(name, fn)
    return traj


def run_generation(kind, cfg):
    actions = generation_actions(kind, cfg)
    traj = run_generation_actions(cfg, actions)
    traj.info["n_pulses"] = int(np.count_nonzero(actions[:, 0]))
    traj.info["actions"] = actions.tolist()
    return traj


# ---------------------------------------------------------------- dispatch


def run_protocol(kind, cfg, **kwargs):
    """Run protocol ``kind`` under scenario ``cfg`` and return its trajectory.

    ``adaptive`` replays an action sequence (keyword ``actions``, zeros by
    default) through the task environment of ``cfg.task``; ``walk`` runs the
    constant baseline coin policy.
    """
    if kind in DETERMINISTIC:
        return run_shaped_pulse(kind, cfg)
    if kind in DD_KINDS:
        return run_dd(kind, cfg)
    if kind in FLOQUET_KINDS:
        return run_floquet(kind, cfg)
    if kind in GENERATION_KINDS:
        return run_generation(kind, cfg)
    if kind == "adaptive":
        from .adaptive import make_environment, rollout

        env = make_environment(cfg.task, cfg)
        actions = kwargs.get("actions")
        if actions is None:
            actions = np.zeros((env.horizon, env.action_dim))
        return rollout(env, actions, seed=cfg.seed).trajectory
    if kind == "walk":
        from .qwalk import WalkConfig, baseline_policy, run_walk

        return run_walk(baseline_policy, WalkConfig.from_scenario(cfg))
    raise ValueError(f"unknown protocol {kind!r}")

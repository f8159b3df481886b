"""Exit criteria 1-10 at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed together in the
terminal summary. Criterion 7 trains one optimizer per seed and takes about
ten minutes on a single core.
"""

import dataclasses
import math
import time

import numpy as np
import pytest
from oracles import (
    dd_oracle,
    floquet_caption_oracle,
    floquet_caption_terminal,
    generation_oracle,
    polarized_oracle,
    preservation_oracle,
    pure_walk_probabilities,
    reward_oracle,
    shaped_oracle,
    terminal_oracle,
)

from pulsebench import cli, protocols
from pulsebench import hamiltonians as ham
from pulsebench.adaptive import (
    CEMConfig,
    RewardSpec,
    cem_optimize,
    make_environment,
    reward_step,
    reward_terminal,
    rollout,
)
from pulsebench.config import preset
from pulsebench.dynamics import LindbladSpec, collapse_operators, evolve
from pulsebench.metrics import concurrence, site_probabilities, target_site_probability
from pulsebench.noise import LorentzianNoiseSpec, psd, synthesize_noise
from pulsebench.pulses import SHAPES, eval_envelope, eval_envelope_derivative
from pulsebench.qstate import InitialStateSpec, ket, make_initial_state, projector
from pulsebench.qwalk import CYCLIC, WalkConfig, run_walk, walk_observation, walk_reward

pytestmark = pytest.mark.acceptance

TRACE_TOL = 1e-8
EIG_TOL = -1e-7


def invariant_errors(states):
    """Largest trace drift and most negative eigenvalue over a stack of states."""
    states = np.asarray(states)
    drift = float(np.max(np.abs(np.trace(states, axis1=1, axis2=2).real - 1)))
    min_eig = float(min(np.linalg.eigvalsh(r)[0] for r in states))
    return drift, min_eig


def invariants_ok(states):
    drift, min_eig = invariant_errors(states)
    return drift <= TRACE_TOL and min_eig >= EIG_TOL


def test_criterion_01_envelopes(report):
    t_scale = 15.0
    worst = 0.0
    for name in SHAPES:
        h = 1e-6 * t_scale
        for c in np.linspace(-3, 3, 1000):
            # lgp contains |C|; its derivative jumps at C = 0.
            if name == "lgp" and abs(c) < 2 * h / t_scale:
                continue
            t = c * t_scale
            up = eval_envelope(name, (t + h) / t_scale, t_scale)
            down = eval_envelope(name, (t - h) / t_scale, t_scale)
            fd = (up - down) / (2 * h)
            an = eval_envelope_derivative(name, c, t_scale)
            worst = max(worst, abs(an - fd) / max(1.0, abs(an)))
    gp0 = abs(eval_envelope("gp", 0.0) - 1 / math.sqrt(math.pi))
    ok = worst < 1e-6 and gp0 <= 1e-12
    report(1, ok, f"max rel. derivative error {worst:.2e} (< 1e-6), |GP(0) - 1/sqrt(pi)| = {gp0:.1e}")
    assert ok


def test_criterion_02_integrator(report):
    g1 = 0.05
    grid = np.linspace(0, 42, 421)
    zero1 = ham.assemble(ham.constant_part(np.zeros((2, 2))))
    damp = evolve(projector(ket("1")), zero1, collapse_operators(LindbladSpec(g1, 0.0), 1), grid=grid)
    e_damp = float(np.max(np.abs(damp.states[:, 1, 1].real - np.exp(-g1 * grid))))

    ga, gb = 0.02, 0.03
    zero2 = ham.assemble(ham.constant_part(np.zeros((4, 4))))
    rho0 = make_initial_state(InitialStateSpec("bell", "phi+"))
    deph = evolve(rho0, zero2, collapse_operators(LindbladSpec(0.0, (ga, gb)), 2), grid=grid,
                  metrics={"c": concurrence})
    e_deph = float(np.max(np.abs(deph.metrics["c"] - np.exp(-2 * (ga + gb) * grid))))

    # Invariants on these and on scenario trajectories of the other criteria.
    trajs = [damp.states, deph.states]
    for name in ("fig1", "fig3", "fig5", "fig7"):
        trajs.append(protocols.run_protocol(preset(name).protocol, preset(name)).states)
    for kind in ("hybrid_qec_dd", "dcg2", "udd16"):
        trajs.append(protocols.run_protocol(kind, dataclasses.replace(preset("fig9"), protocol=kind)).states)
    trajs.append(protocols.run_protocol("gen_no_control", preset("fig11")).states)
    errs = [invariant_errors(s) for s in trajs]
    drift = max(e[0] for e in errs)
    min_eig = min(e[1] for e in errs)
    ok = e_damp <= 1e-6 and e_deph <= 1e-5 and drift <= TRACE_TOL and min_eig >= EIG_TOL
    report(2, ok, f"damping err {e_damp:.1e}, dephasing err {e_deph:.1e}, "
                  f"trace drift {drift:.1e}, min eigenvalue {min_eig:.1e} over {len(trajs)} trajectories")
    assert ok


def test_criterion_03_noise_statistics(report):
    # The traces fig1 runs use: noise substream (seed, 1).
    traces = [synthesize_noise(LorentzianNoiseSpec(seed=protocols.substream(s, "noise"))) for s in range(500)]
    values = np.array([tr(0.0) for tr in traces])
    spec = traces[0].spec
    # Sum over the realized components of S(Omega_j) dOmega, averaged over the ensemble.
    expected = float(np.mean([np.sum(psd(spec, tr.frequencies)) * spec.delta_omega for tr in traces]))
    rel = abs(np.var(values) - expected) / expected

    # Averaged periodogram. cos(-w t + phi) = cos(w t - phi), so the spectrum
    # folds onto w >= 0; the folded Lorentzian pair peaks near 0.45.
    dt, n = 0.25, 8000
    times = np.arange(n) * dt
    power = np.zeros(n // 2 + 1)
    for tr in traces[:50]:
        power += np.abs(np.fft.rfft(tr.sample(times))) ** 2
    omega = 2 * np.pi * np.fft.rfftfreq(n, dt)
    edges = np.arange(0.0, 5.0 + 1e-9, 0.1)
    binned = np.histogram(omega, edges, weights=power)[0]
    peak = 0.5 * (edges[np.argmax(binned)] + edges[np.argmax(binned) + 1])
    ok = rel < 0.1 and abs(peak - spec.omega_c) <= spec.gamma_hwhm
    report(3, ok, f"variance rel. error {rel:.3f} (< 0.10), periodogram peak {peak:.2f} "
                  f"(Omega_c {spec.omega_c}, Gamma {spec.gamma_hwhm})")
    assert ok


def test_criterion_04_concurrence(report):
    phi = np.zeros(4)
    phi[[0, 3]] = 1 / math.sqrt(2)
    bell = np.outer(phi, phi)
    werner = max(abs(concurrence(p * bell + (1 - p) * np.eye(4) / 4) - max(0.0, (3 * p - 1) / 2))
                 for p in np.linspace(0, 1, 6))
    rng = np.random.default_rng(0)
    lu = 0.0
    for _ in range(100):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        us = []
        for _ in range(2):
            q, r = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            us.append(q * (np.diag(r) / np.abs(np.diag(r))))
        u = np.kron(*us)
        lu = max(lu, abs(concurrence(rho) - concurrence(u @ rho @ u.conj().T)))
    ok = werner <= 1e-8 and lu <= 1e-8
    report(4, ok, f"Werner max error {werner:.1e}, local-unitary max change {lu:.1e}")
    assert ok


def test_criterion_05_protocol_structure(report):
    t_total = 42.0
    ref = np.array([t_total * math.sin(math.pi * k / 34) ** 2 for k in range(1, 17)])
    udd = protocols.udd_timings(16, t_total)
    err = float(np.max(np.abs(udd - ref)))
    cfg9, cfg11 = preset("fig9"), preset("fig11")
    counts = (
        len(protocols.dd_pulse_plan("dcg2", cfg9)[0]),
        len(protocols.dd_pulse_plan("udd16", cfg9)[0]),
        int(np.count_nonzero(protocols.generation_actions("gen_knill_dd", cfg11)[:, 0])),
    )
    ok = err <= 1e-12 and abs(udd[0] - 0.35756) < 5e-6 and counts == (2, 16, 12)
    report(5, ok, f"UDD-16 max timing error {err:.1e}, t1 = {udd[0]:.5f}, pulse counts {counts}")
    assert ok


def test_criterion_06_qec_dd_hierarchy(report):
    seeds = range(10)
    finals = {}
    for kind in ("hybrid_qec_dd", "dcg2", "udd16"):
        cfg = dataclasses.replace(preset("fig9"), protocol=kind, shape="gp")
        finals[kind] = np.array([
            protocols.run_protocol(kind, dataclasses.replace(cfg, seed=s)).metrics["concurrence"][-1]
            for s in seeds
        ])
    mean = {k: float(v.mean()) for k, v in finals.items()}
    se = {k: float(v.std(ddof=1) / math.sqrt(len(v))) for k, v in finals.items()}

    def gap_ok(a, b):
        return mean[a] - mean[b] > math.hypot(se[a], se[b])

    ok = gap_ok("hybrid_qec_dd", "dcg2") and gap_ok("dcg2", "udd16")
    report(6, ok, "mean final C: " + ", ".join(f"{k} {mean[k]:.4f} (SE {se[k]:.4f})" for k in finals)
           + "; need hybrid > DCG-2 > UDD-16 by more than the pooled SE")
    assert ok


@pytest.mark.slow
def test_criterion_07_generation_improvement(report):
    base_cfg = preset("fig11")
    gains, finals, baselines, ok_inv = [], [], [], True
    start = time.perf_counter()
    for s in range(5):
        cfg = dataclasses.replace(base_cfg, seed=s)
        # Train on a looser tolerance with the cached noise, then replay the
        # best sequence on the exact scenario.
        train_cfg = dataclasses.replace(cfg, rtol=1e-6, atol=1e-8, noise_cache=True)
        result = cem_optimize(make_environment("gen_shaped", train_cfg), CEMConfig.from_scenario(train_cfg), seed=s)
        env = make_environment("gen_shaped", cfg)
        assert env.horizon <= 40
        ep = rollout(env, result.best_actions, seed=s)
        baseline = protocols.run_protocol("gen_no_control", cfg)
        ok_inv &= invariants_ok(ep.trajectory.states) and invariants_ok(baseline.states)
        finals.append(float(ep.values[-1]))
        baselines.append(float(baseline.metrics["concurrence"][-1]))
        gains.append(finals[-1] - baselines[-1])
    elapsed = time.perf_counter() - start
    gain = float(np.mean(gains))
    ok = gain >= 0.2 and ok_inv and elapsed <= 15 * 60
    report(7, ok, f"mean final C {np.mean(finals):.4f} vs no-control {np.mean(baselines):.4f}, "
                  f"gain {gain:+.4f} (>= 0.2), {elapsed:.0f} s")
    assert ok


def test_criterion_08_walk_oracle(report):
    errs = []
    for action in [(0.0, 0.0, 0.0), (0.3, 0.2, 0.1), (-0.6, -0.7, -0.4)]:
        cfg = WalkConfig(boundary=CYCLIC, disorder=0.0, noise=None, gamma1=0.0, gamma_phi=0.0,
                         rtol=1e-12, atol=1e-14)
        traj = run_walk(np.tile(action, (30, 1)), cfg)
        dm = np.array([site_probabilities(r) for r in traj.states])
        errs.append(float(np.max(np.abs(dm - pure_walk_probabilities(action, cfg)))))
    cfg = WalkConfig()
    traj = run_walk(np.zeros((30, 3)), cfg)
    obs_len = walk_observation([traj.states[0]], 0, cfg).size
    tsp0 = target_site_probability(traj.states[0], 0)
    ok = max(errs) <= 1e-10 and obs_len == 974 and abs(tsp0 - 1) < 1e-15
    report(8, ok, f"max probability error {max(errs):.1e} (<= 1e-10), observation length {obs_len}, "
                  f"initial TSP(0) {tsp0}")
    assert ok


def test_criterion_09_reward_formulas(report):
    rng = np.random.default_rng(0)
    worst = 0.0

    def check(value, expected):
        nonlocal worst
        worst = max(worst, abs(value - expected))

    grid = np.linspace(0, 1, 11)
    for _ in range(50):
        c_prev, c_next, c0 = rng.uniform(0, 1, 3)
        a, p = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        check(reward_step(RewardSpec.for_task("preservation"), c_prev, c_next, c0, a, p),
              preservation_oracle(c_prev, c_next, c0, a, p))
        check(reward_step(RewardSpec.for_task("stepwise_circular_preservation"), c_prev, c_next, c0, a, p),
              preservation_oracle(c_prev, c_next, c0, a, p))
        check(reward_step(RewardSpec.for_task("generation"), c_prev, c_next, c0, a, p),
              generation_oracle(c_prev, c_next, a, p))
        check(reward_step(RewardSpec.for_task("stepwise_circular_generation"), c_prev, c_next, c0, a, p),
              generation_oracle(c_prev, c_next, a, p))
        a4, p4 = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)
        check(reward_step(RewardSpec.for_task("pwc_preservation"), c_prev, c_next, c0, a4, p4),
              preservation_oracle(c_prev, c_next, c0, a4, p4, (75, 10, 0.01, 0.005), power=1))
        check(reward_step(RewardSpec.for_task("pwc_generation"), c_prev, c_next, c0, a4, p4),
              generation_oracle(c_prev, c_next, a4, p4, (50, 1.5, 0.01, 0.005)))
        check(reward_step(RewardSpec.for_task("polarized_simple"), c_prev, c_next, c0, a),
              polarized_oracle(c_prev, c_next, False))
        theta = rng.uniform(0, math.pi)
        check(reward_step(RewardSpec.for_task("gen_shaped"), c_prev, c_next, c0, [theta, 0.0]),
              shaped_oracle(c_prev, c_next, theta))
        pulse = rng.uniform() < 0.5
        check(reward_step(RewardSpec.for_task("dd_sparse"), c_prev, c_next, c0, [math.pi * pulse, 0.0]),
              dd_oracle(c_next, pulse, False))
        a9, p9 = rng.uniform(0, 1, 9), rng.uniform(0, 1, 9)
        check(reward_step(RewardSpec.for_task("floquet_dense"), c_prev, c_next, c0, a9, p9),
              floquet_caption_oracle(c_next, a9, p9))
    for c in grid:
        for task in ("preservation", "generation", "pwc_preservation", "pwc_generation"):
            check(reward_terminal(RewardSpec.for_task(task), c), terminal_oracle(c))
        check(reward_terminal(RewardSpec.for_task("dd_sparse"), c), dd_oracle(c, False, True))
        check(reward_terminal(RewardSpec.for_task("floquet_dense"), c), floquet_caption_terminal(c))
        check(reward_step(RewardSpec.for_task("polarized_simple"), 0.0, c, 0.0, [0])
              + reward_terminal(RewardSpec.for_task("polarized_simple"), c), polarized_oracle(0.0, c, True))

    # Walk transport reward against its defining formula.
    walk_cfg = WalkConfig()
    for _ in range(20):
        probs = [rng.dirichlet(np.ones(11)) for _ in range(31)]
        n = int(rng.integers(1, 31))
        tsp = [q[2] for q in probs]
        check(walk_reward(probs, n, walk_cfg), reward_oracle(tsp, probs[n], n, 30))

    goldens = {
        "terminal 75*0.96^4": (reward_terminal(RewardSpec.for_task("generation"), 0.96), 63.701, 1e-3),
        "DD final 10*C": (reward_terminal(RewardSpec.for_task("dd_sparse"), 0.9), 9.0, 1e-12),
        "Floquet +500": (reward_terminal(RewardSpec.for_task("floquet_dense"), 0.951), 500.0, 0.0),
        "Floquet -100": (reward_terminal(RewardSpec.for_task("floquet_dense"), 0.95), -100.0, 0.0),
    }
    golden_ok = all(abs(v - e) <= tol for v, e, tol in goldens.values())

    # The DD episode replaces its last step reward with the final reward.
    cfg = dataclasses.replace(preset("fig9"), dd_steps=4, t_total=1.2)
    ep = rollout(make_environment("dd_sparse", cfg), np.zeros((4, 2)), seed=0)
    check(ep.rewards[-1], dd_oracle(ep.values[-1], False, True))

    ok = worst <= 1e-9 and golden_ok
    report(9, ok, f"max deviation from re-implementations {worst:.1e}; goldens "
                  + ", ".join(f"{k} = {v[0]:.6g}" for k, v in goldens.items()))
    assert ok


def test_criterion_10_reproducibility(report, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--preset", "fig1", "--out", str(a)]) == 0
    assert cli.main(["run", "--preset", "fig1", "--out", str(b)]) == 0
    identical = (a / "fig1_seed0.csv").read_bytes() == (b / "fig1_seed0.csv").read_bytes()
    start = time.perf_counter()
    assert cli.main(["sweep", "--preset", "fig1", "--out", str(tmp_path / "sweep")]) == 0
    elapsed = time.perf_counter() - start
    n_runs = len(list((tmp_path / "sweep").glob("fig1_*_seed0.csv")))
    ok = identical and n_runs == 36 and elapsed < 300
    report(10, ok, f"byte-identical CSV {identical}, sweep of {n_runs} runs in {elapsed:.1f} s (< 300 s)")
    assert ok

import dataclasses
import math

import numpy as np
import pytest

from pulsebench import protocols as proto
from pulsebench.config import preset
from pulsebench.metrics import concurrence, fidelity_pure
from pulsebench.qstate import InitialStateSpec, ghz_ket, make_initial_state, projector

PHI = make_initial_state(InitialStateSpec("bell", "phi+"))


def test_udd_first_time():
    assert proto.udd_timings(16, 42.0)[0] == pytest.approx(0.35756, abs=5e-6)
    assert proto.udd_timings(16, 42.0)[0] == pytest.approx(42 * math.sin(math.pi / 34) ** 2, abs=1e-12)


def test_udd_single_pulse_midpoint():
    assert proto.udd_timings(1, 1.0)[0] == pytest.approx(0.5)


def test_udd_monotone():
    for n in range(1, 65):
        t = proto.udd_timings(n, 1.0)
        assert len(t) == n
        assert np.all(np.diff(t) > 0)
        assert 0 < t[0] and t[-1] < 1


def test_udd_symmetric():
    t = proto.udd_timings(16, 42.0)
    assert np.allclose(t + t[::-1], 42.0)


def test_qec_correct():
    rho = np.eye(4) / 4
    assert np.allclose(proto.qec_correct(rho, PHI, 0.0), rho)
    assert np.array_equal(proto.qec_correct(rho, PHI, 1.0), PHI)
    out = proto.qec_correct(rho, PHI, 0.3)
    assert fidelity_pure(out, ghz_ket(2)) == pytest.approx(0.475)
    with pytest.raises(ValueError):
        proto.qec_correct(rho, PHI, 1.5)


def test_lyapunov_degenerate():
    o_x, o_y = proto.floquet_operators(2)
    assert proto.lyapunov_phase(PHI, PHI, o_x, o_y) == 0.0


TARGET00 = projector(np.array([1, 0, 0, 0]))


def near(target, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    noise = a @ a.conj().T
    return 0.8 * target + 0.2 * noise / np.trace(noise).real


def test_lyapunov_sign_swap_shifts_by_pi():
    o_x, o_y = proto.floquet_operators(2)
    rho = near(TARGET00, 0)
    a = proto.lyapunov_phase(rho, TARGET00, o_x, o_y)
    # Swapping rho and the target flips the sign of M and of both traces.
    b = proto.lyapunov_phase(TARGET00, rho, o_x, o_y)
    assert (b - a) % (2 * math.pi) == pytest.approx(math.pi)


def test_lyapunov_phase_decreases_distance():
    o_x, o_y = proto.floquet_operators(2)
    psi = np.array([1, 0, 0, 0], dtype=complex)
    for seed in range(5):
        # Displace the target along the O_x flow, then check one short step of the feedback drive.
        w, v = np.linalg.eigh(o_x)
        u0 = v @ np.diag(np.exp(-1j * w * 0.2)) @ v.conj().T
        rho = u0 @ near(TARGET00, seed) @ u0.conj().T
        phi = proto.lyapunov_phase(rho, TARGET00, o_x, o_y)
        h = math.cos(phi) * o_x + math.sin(phi) * o_y
        w, v = np.linalg.eigh(h)
        u = v @ np.diag(np.exp(-1j * w * 1e-3)) @ v.conj().T
        f0 = fidelity_pure(rho, psi)
        f1 = fidelity_pure(u @ rho @ u.conj().T, psi)
        assert 1 - f1 < 1 - f0


def test_lyapunov_is_degenerate_for_bell_target():
    o_x, o_y = proto.floquet_operators(2)
    for seed in range(5):
        assert proto.lyapunov_phase(near(PHI, seed), PHI, o_x, o_y) == 0.0


def test_single_pulse_schedule():
    sched = proto.deterministic_schedule("single_pulse", preset("fig1"))
    assert [(w.center, w.duration) for w in sched["windows"]] == [(7.0, 15.0)]


def test_multi_pulse_centers():
    sched = proto.deterministic_schedule("multi_pulse", preset("fig3"))
    assert [w.center for w in sched["windows"]] == [7.5, 15.0, 22.5, 30.0]


def test_sequential_circular_windows():
    sched = proto.deterministic_schedule("sequential_circular", preset("fig7"))
    ws = sched["windows"]
    assert len(ws) == 2
    assert ws[0].end <= ws[1].start
    assert [d.family for d in sched["drives"]] == ["lcp", "rcp"]


def test_sequential_linear_families():
    sched = proto.deterministic_schedule("sequential_linear", preset("fig5"))
    assert [d.family for d in sched["drives"]] == ["linear_x", "linear_y", "linear_z"]


def test_drive_scales_leave_interaction_alone():
    cfg = preset("fig3")
    sched = proto.deterministic_schedule("multi_pulse", cfg, drive_scales=[0.0, 1.0, 0.5, 2.0])
    assert all(w.amplitude_scale == 1.0 for w in sched["interaction"].windows)
    assert [w.amplitude_scale for w in sched["drives"][0].envelope.windows] == [0.0, 1.0, 0.5, 2.0]


def test_dd_pulse_counts():
    cfg = preset("fig9")
    assert len(proto.dd_pulse_plan("dcg2", cfg)[0]) == 2
    assert len(proto.dd_pulse_plan("udd16", cfg)[0]) == 16
    knill = proto.generation_actions("gen_knill_dd", preset("fig11"))
    assert np.count_nonzero(knill[:, 0]) == 12


def test_udd16_run_uses_udd_timings():
    cfg = dataclasses.replace(preset("fig9"), protocol="udd16")
    traj = proto.run_protocol("udd16", cfg)
    assert traj.info["pulse_times"] == [float(x) for x in proto.udd_timings(16, 42.0)]


def test_gen_no_control_without_coupling():
    cfg = dataclasses.replace(preset("fig11"), g=0.0)
    traj = proto.run_protocol("gen_no_control", cfg)
    assert np.all(traj.metrics["concurrence"] == 0.0)


def test_hybrid_full_correction_restores_target():
    cfg = dataclasses.replace(preset("fig9"), p_qec=1.0, s_max=1.0, qec_rule="constant")
    traj = proto.run_protocol("hybrid_qec_dd", cfg)
    edges = traj.info["cycle_edges"][1:]
    idx = [int(np.argmin(np.abs(traj.times - e))) for e in edges]
    assert np.allclose(traj.metrics["concurrence"][idx], 1.0, atol=1e-12)
    assert traj.info["qec_applied"] == len(edges)


def test_protocols_are_deterministic():
    cfg = preset("fig1")
    a = proto.run_protocol("single_pulse", cfg)
    b = proto.run_protocol("single_pulse", cfg)
    assert np.array_equal(a.states, b.states)


def test_fig1_trace_and_positivity():
    traj = proto.run_protocol("single_pulse", preset("fig1"))
    traces = np.trace(traj.states, axis1=1, axis2=2).real
    assert np.max(np.abs(traces - 1)) <= 1e-8
    assert min(np.linalg.eigvalsh(r)[0] for r in traj.states) >= -1e-7
    assert traj.metrics["concurrence"][0] == pytest.approx(1.0)


def test_floquet_reference_runs():
    cfg = dataclasses.replace(preset("fig10"), t_total=5.0, n_grid=6)
    traj = proto.run_protocol("floquet_reference", cfg)
    assert set(traj.metrics) == {"concurrence", "fidelity"}
    assert len(traj) == 6


def test_floquet_optimized_fixed_keeps_best_trial():
    cfg = dataclasses.replace(preset("fig10"), t_total=3.0, n_grid=4, floquet_trials=3)
    traj = proto.run_protocol("floquet_optimized_fixed", cfg)
    assert traj.metrics["concurrence"][-1] == pytest.approx(max(traj.info["trial_finals"]))


def test_noise_cache_matches_exact():
    cfg = dataclasses.replace(preset("fig1"), t_total=10.0, n_grid=11)
    a = proto.run_protocol("single_pulse", cfg)
    b = proto.run_protocol("single_pulse", dataclasses.replace(cfg, noise_cache=True))
    assert np.max(np.abs(a.metrics["concurrence"] - b.metrics["concurrence"])) < 1e-7


def test_unknown_protocol():
    with pytest.raises(ValueError):
        proto.run_protocol("spin_echo", preset("fig1"))


def test_generation_concurrence_series():
    cfg = dataclasses.replace(preset("fig11"), t_total=3.0, gen_steps=2, n_grid=3)
    traj = proto.run_protocol("gen_heuristic", cfg)
    assert traj.metrics["concurrence"][-1] == pytest.approx(concurrence(traj.final_state))
    assert traj.info["n_pulses"] == 2

"""Independent reference implementations shared by the unit and acceptance tests.

Nothing here imports the package under test; each function transcribes a
reward formula or simulates the model by a different route.
"""

import math

import numpy as np
from scipy.integrate import quad


def preservation_oracle(c_prev, c_next, c0, a, a_prev, w=(75, 10, 0.05, 0.02), power=2):
    l1 = sum(abs(x) for x in a)
    dl1 = sum(abs(x - y) for x, y in zip(a, a_prev))
    return -w[0] * (c0 - c_next) ** power - w[1] * (c_next - c_prev) ** 2 - w[2] * l1 - w[3] * dl1


def generation_oracle(c_prev, c_next, a, a_prev, w=(15, 0.5, 0.05, 0.02)):
    l1 = sum(abs(x) for x in a)
    dl1 = sum(abs(x - y) for x, y in zip(a, a_prev))
    return w[0] * (c_next - c_prev) * (1 + 2 * c_next**2) + w[1] * c_next**2 - w[2] * l1 - w[3] * dl1


def terminal_oracle(c):
    return 75 * c**4 if c > 0.95 else (-30 if c < 0.2 else 0.0)


def polarized_oracle(c_prev, c_next, final):
    return 10 * (c_next - c_prev) + (10 if final and c_next > 0.8 else 0)


def shaped_oracle(c_prev, c_next, a0):
    return 50 * (c_next - c_prev) - 0.005 * (a0 / math.pi) ** 2


def dd_oracle(c_next, pulse, final):
    if final:
        return 10 * c_next
    return (0.01 if c_next > 0.9 else 0.0) - (0.001 if pulse else 0.0)


def floquet_caption_oracle(c_next, a, a_prev):
    da = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, a_prev)))
    return 20 * c_next**3 - 5 * (1 - c_next) ** 2 - 0.05 * da


def floquet_caption_terminal(c):
    return 500 if c > 0.95 else -100


def reward_oracle(tsp, probs_n, n, N, x_t=-3):
    """Direct transcription of the transport reward."""
    p = tsp[n]
    xs = np.arange(-5, 6)
    r = 50 * p + (100 * math.exp(5 * p) if p > 0.3 else 0.0)
    r -= 2 * sum(q * abs(x - x_t) for q, x in zip(probs_n, xs))
    hist = tsp[max(0, n - 5):n]
    r += 20 * max(0.0, p - sum(hist) / len(hist))
    r += 200 * p**2 if n == N else 0.0
    r += 10 * p * n / N + 50 * (p - tsp[n - 1])
    if n >= 4:
        last = tsp[n - 4:n + 1]
        mean = sum(last) / 5
        if sum((v - mean) ** 2 for v in last) / 5 < 1e-6 and p < 0.1:
            r -= 10
    return r


def pure_walk_probabilities(action, config):
    """Independent amplitude simulator for a constant coin action and a cyclic lattice.

    The coin Hamiltonian has a fixed axis, so each step's propagator is the
    rotation exp(-i A (cos phi X + sin phi Y)) with A the integrated drive.
    """
    n = config.n_sites
    psi = np.zeros((2, n), dtype=complex)
    psi[0, n // 2] = 1 / math.sqrt(2)
    psi[1, n // 2] = 1j / math.sqrt(2)
    theta = (action[0] + 1) / 2 * 3 * math.pi
    phi = action[1] * math.pi
    tc = 0.5 * config.n_steps * config.dt_step + action[2] * 3 * config.dt_step
    axis = np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])

    def f(t):
        c = (t - tc) / config.tau
        return math.exp(-c * c) / math.sqrt(math.pi)

    out = [np.sum(np.abs(psi) ** 2, axis=0)]
    for k in range(config.n_steps):
        a, b = k * config.dt_step, (k + 1) * config.dt_step
        area = config.omega0 * theta / math.pi * quad(f, a, b, epsabs=1e-14, epsrel=1e-14)[0]
        u = math.cos(area) * np.eye(2) - 1j * math.sin(area) * axis
        psi = u @ psi
        psi = np.stack([np.roll(psi[0], 1), np.roll(psi[1], -1)])
        out.append(np.sum(np.abs(psi) ** 2, axis=0))
    return np.array(out)

import math

import numpy as np
import pytest

from pulsebench.metrics import (
    concurrence,
    fidelity_pure,
    mutual_information,
    target_site_probability,
    von_neumann_entropy,
    walk_entanglement_entropy,
)
from pulsebench.qstate import InitialStateSpec, ket, make_initial_state, projector

PHI = make_initial_state(InitialStateSpec("bell", "phi+"))
PHI_KET = (ket("00") + ket("11")) / math.sqrt(2)


def werner(p):
    return p * PHI + (1 - p) * np.eye(4) / 4


def random_state(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def brute_concurrence(rho):
    # Hermitian form: sqrt of the eigenvalues of sqrt(rho) rho~ sqrt(rho).
    sysy = np.fliplr(np.diag([-1, 1, 1, -1])).astype(complex)
    w, v = np.linalg.eigh(rho)
    root = v @ np.diag(np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = root @ sysy @ rho.conj() @ sysy @ root
    lam = np.sort(np.sqrt(np.clip(np.linalg.eigvalsh(m), 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1:].sum())


def test_concurrence_limits():
    assert concurrence(PHI) == pytest.approx(1.0)
    assert concurrence(projector(ket("00"))) == 0.0


def test_werner_closed_form():
    for p in np.linspace(0, 1, 11):
        c = concurrence(werner(p))
        assert abs(c - max(0.0, (3 * p - 1) / 2)) < 1e-8
        assert abs(c - brute_concurrence(werner(p))) < 1e-8
    assert concurrence(werner(0.5)) == pytest.approx(0.25)


def test_local_unitary_invariance():
    rng = np.random.default_rng(0)
    for _ in range(100):
        rho = random_state(rng, 4)
        u = np.kron(random_unitary(rng, 2), random_unitary(rng, 2))
        assert abs(concurrence(rho) - concurrence(u @ rho @ u.conj().T)) < 1e-8


def test_entropy_values():
    assert von_neumann_entropy(projector(ket("+"))) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2))
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(math.log(4))


def walk_state(coin, site, n=11):
    pos = np.zeros(n)
    pos[site + (n - 1) // 2] = 1
    psi = np.kron(coin, pos)
    return np.outer(psi, psi.conj())


def test_walk_entropy_initial_is_zero():
    rho = walk_state(np.array([1, 1j]) / math.sqrt(2), 0)
    assert walk_entanglement_entropy(rho) == pytest.approx(0.0, abs=1e-12)


def test_walk_entropy_maximally_mixed_position():
    rho = np.kron(projector(ket("0")), np.eye(11) / 11)
    assert walk_entanglement_entropy(rho) == pytest.approx(math.log(11))


def test_mutual_information():
    prod = np.kron(np.eye(2) / 2, np.eye(3) / 3)
    assert mutual_information(prod) == pytest.approx(0.0, abs=1e-12)
    # (|0>|x0> + |1>|x1>)/sqrt(2) on two sites.
    psi = np.zeros(4)
    psi[0] = psi[3] = 1 / math.sqrt(2)
    assert mutual_information(np.outer(psi, psi)) == pytest.approx(2 * math.log(2))
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert mutual_information(random_state(rng, 22)) >= -1e-9


def test_target_site_probability():
    rho = walk_state(np.array([1, 1j]) / math.sqrt(2), 0)
    assert target_site_probability(rho, 0) == pytest.approx(1.0)
    assert target_site_probability(rho, -3) == 0.0
    mixed = random_state(np.random.default_rng(4), 22)
    assert sum(target_site_probability(mixed, x) for x in range(-5, 6)) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        target_site_probability(rho, 6)


def test_fidelity_pure():
    assert fidelity_pure(PHI, PHI_KET) == pytest.approx(1.0)
    assert fidelity_pure(projector(ket("01")), PHI_KET) == 0.0
    assert fidelity_pure(werner(0.5), PHI_KET) == pytest.approx(0.625)

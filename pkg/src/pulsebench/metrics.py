"""Entanglement and transport figures of merit."""

import numpy as np

from .qstate import SY, partial_trace

_SYSY = np.kron(SY, SY)
IMAG_TOL = 1e-8


def concurrence(rho):
    """Wootters concurrence of a two-qubit density matrix.

    The eigenvalues of the non-Hermitian ``R = rho (sy sy) rho^* (sy sy)`` come
    from a general eigensolver; imaginary parts are discarded and small negative
    real parts are clamped to zero before the square root.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence needs a two-qubit (4x4) state, got {rho.shape}")
    rho_tilde = _SYSY @ rho.conj() @ _SYSY
    ev = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    c = lam[0] - lam[1] - lam[2] - lam[3]
    return float(min(1.0, max(0.0, c)))


def von_neumann_entropy(rho):
    """``-Tr(rho ln rho)`` with ``0 ln 0 = 0``."""
    lam = np.linalg.eigvalsh(0.5 * (rho + np.conj(np.transpose(rho))))
    lam = lam[lam > 1e-15]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def _walk_dims(rho):
    dim = np.shape(rho)[0]
    if dim % 2:
        raise ValueError(f"walk states have dimension 2 N_s, got {dim}")
    return [2, dim // 2]


def position_state(rho):
    """Reduced position state ``Tr_coin rho`` of a walk state."""
    return partial_trace(rho, 1, _walk_dims(rho))


def walk_entanglement_entropy(rho):
    """Entropy of the position-reduced walk state."""
    return von_neumann_entropy(position_state(rho))


def mutual_information(rho):
    """``S_coin + S_pos - S_total`` of a walk state."""
    dims = _walk_dims(rho)
    s_coin = von_neumann_entropy(partial_trace(rho, 0, dims))
    s_pos = von_neumann_entropy(partial_trace(rho, 1, dims))
    return s_coin + s_pos - von_neumann_entropy(rho)


def site_probabilities(rho):
    """Diagonal of the position-reduced state, ordered from site ``-(N_s-1)/2`` upward."""
    return np.real(np.diag(position_state(rho))).copy()


def target_site_probability(rho, x):
    """Population of lattice site ``x`` (labels centred on 0)."""
    p = site_probabilities(rho)
    half = (len(p) - 1) // 2
    if not -half <= x <= half:
        raise ValueError(f"site {x} outside [-{half}, {half}]")
    return float(p[x + half])


def fidelity_pure(rho, psi):
    """``<psi|rho|psi>`` for a normalized ket ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (psi.size, psi.size):
        raise ValueError(f"state of dimension {rho.shape[0]} and ket of length {psi.size} differ")
    val = np.vdot(psi, rho @ psi)
    if abs(val.imag) > IMAG_TOL:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3e}; is rho Hermitian?")
    return float(min(1.0, max(0.0, val.real)))

"""Dense states and operators for qubit registers and the coin-lattice walk space.

Conventions: qubit 0 is the leftmost tensor factor, sigma_z = diag(1, -1),
and sigma_minus = |0><1| lowers the excited state |1> to the ground state |0>.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
SPLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SMINUS = np.array([[0, 1], [0, 0]], dtype=complex)
PAULIS = {"I": ID2, "X": SX, "Y": SY, "Z": SZ}

HERMITIAN_TOL = 1e-9
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


class StateValidationError(ValueError):
    """A density matrix violates Hermiticity, unit trace or positivity."""


def validate_state(rho, tol=None, *, expected_trace=1.0):
    """Check the density-matrix invariants and return ``rho`` as a complex array.

    Parameters
    ----------
    rho : array_like
        Square matrix.
    tol : float, optional
        One tolerance for all three checks. By default the Hermiticity check
        uses 1e-9 and the trace and positivity checks use 1e-8.
    expected_trace : float, optional
        Target trace. Walk states under the non-unitary boundary shift lose
        norm, so callers may pass their current trace.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise StateValidationError(f"density matrix must be square, got shape {rho.shape}")
    herm_tol = HERMITIAN_TOL if tol is None else tol
    tr_tol = TRACE_TOL if tol is None else tol
    pos_tol = POSITIVITY_TOL if tol is None else tol
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise StateValidationError(f"not Hermitian: max |rho - rho^+| = {herm:.3e}")
    tr = complex(np.trace(rho))
    if abs(tr - expected_trace) > tr_tol:
        raise StateValidationError(f"trace {tr.real:.12g} deviates from {expected_trace}")
    lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if lam < -pos_tol:
        raise StateValidationError(f"not positive semidefinite: min eigenvalue {lam:.3e}")
    return rho


def tensor_embed(op, site, n_sites, local_dims=None):
    """Embed a local operator as ``I x ... x op x ... x I``.

    Parameters
    ----------
    op : array_like
        Local operator acting on subsystem ``site``.
    site : int
        Position of ``op`` in the tensor product, counted from the left.
    n_sites : int
        Number of subsystems.
    local_dims : sequence of int, optional
        Dimension of each subsystem; qubits (all 2) by default.
    """
    op = np.asarray(op, dtype=complex)
    dims = [2] * n_sites if local_dims is None else list(local_dims)
    if len(dims) != n_sites:
        raise ValueError(f"local_dims has {len(dims)} entries for {n_sites} sites")
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")
    if op.shape != (dims[site], dims[site]):
        raise ValueError(
            f"operator shape {op.shape} does not match local dimension {dims[site]} at site {site}"
        )
    left = int(np.prod(dims[:site], dtype=int))
    right = int(np.prod(dims[site + 1 :], dtype=int))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def pauli_string(label):
    """Return the tensor product of single-qubit Paulis named by ``label`` (e.g. ``"XZ"``)."""
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, PAULIS[ch])
    return out


def pauli_labels(n_qubits):
    """Non-identity Pauli strings in lexicographic order over ``IXYZ``."""
    return ["".join(p) for p in product("IXYZ", repeat=n_qubits)][1:]


def n_qubits_of(dim):
    """Number of qubits for a register of dimension ``dim``; rejects non-powers of two."""
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def pauli_expectations(rho, n_qubits=None):
    """Expectation values ``Tr(rho P)`` for all non-identity Pauli strings.

    Returns a real vector of length ``4**N - 1`` ordered as :func:`pauli_labels`.
    """
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho.shape[0]) if n_qubits is None else n_qubits
    if rho.shape[0] != 2**n:
        raise ValueError(f"state of dimension {rho.shape[0]} is not a {n}-qubit state")
    vals = np.array([np.trace(rho @ pauli_string(lab)) for lab in pauli_labels(n)])
    return vals.real.copy()


def state_from_pauli_expectations(values, n_qubits):
    """Rebuild ``rho = (I + sum_i <P_i> P_i) / 2**N`` from :func:`pauli_expectations` output."""
    dim = 2**n_qubits
    rho = np.eye(dim, dtype=complex)
    for v, lab in zip(values, pauli_labels(n_qubits)):
        rho = rho + v * pauli_string(lab)
    return rho / dim


def ket(label):
    """Product ket from a string over ``0``, ``1``, ``+``, ``-``."""
    singles = {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
        "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    }
    out = np.array([1.0 + 0j])
    for ch in label:
        out = np.kron(out, singles[ch])
    return out


def projector(psi):
    """Pure-state density matrix ``|psi><psi|`` of a normalized copy of ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def ghz_ket(n_qubits):
    """``(|0...0> + |1...1>)/sqrt(2)``."""
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


SEPARABLE_LABELS = ("00", "+0", "0+", "++")
BELL_LABELS = ("phi+", "psi+")


@dataclass(frozen=True)
class InitialStateSpec:
    """Initial state recipe.

    ``kind`` is one of ``"separable"`` (``label`` in 00, +0, 0+, ++),
    ``"bell"`` (``label`` phi+ or psi+), ``"ghz"`` or ``"perturbed_ghz"``.
    """

    kind: str
    label: str = ""
    n_qubits: int = 2
    epsilon: float = 0.0
    seed: int | tuple = 0

    def __post_init__(self):
        if self.kind == "separable" and self.label not in SEPARABLE_LABELS:
            raise ValueError(f"unknown separable label {self.label!r}")
        if self.kind == "bell" and self.label not in BELL_LABELS:
            raise ValueError(f"unknown Bell label {self.label!r}")
        if self.kind not in ("separable", "bell", "ghz", "perturbed_ghz"):
            raise ValueError(f"unknown initial-state kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")

    @classmethod
    def from_label(cls, label, *, epsilon=0.0, seed=0, n_qubits=2):
        """Parse the config names ``00, +0, 0+, ++, phi+, psi+, ghz, perturbed_ghz``."""
        if label in SEPARABLE_LABELS:
            return cls("separable", label)
        if label in BELL_LABELS:
            return cls("bell", label)
        if label == "ghz":
            return cls("ghz", n_qubits=n_qubits)
        if label == "perturbed_ghz":
            return cls("perturbed_ghz", n_qubits=n_qubits, epsilon=epsilon, seed=seed)
        raise ValueError(f"unknown initial state {label!r}")

    @property
    def name(self):
        return self.label if self.kind in ("separable", "bell") else self.kind


def initial_ket(spec):
    """State vector described by an :class:`InitialStateSpec`."""
    if spec.kind == "separable":
        return ket(spec.label)
    if spec.kind == "bell":
        a, b = ("00", "11") if spec.label == "phi+" else ("01", "10")
        return (ket(a) + ket(b)) / np.sqrt(2)
    psi = ghz_ket(spec.n_qubits)
    if spec.kind == "perturbed_ghz" and spec.epsilon > 0:
        rng = np.random.default_rng(spec.seed)
        delta = rng.standard_normal(psi.size) + 1j * rng.standard_normal(psi.size)
        delta /= np.linalg.norm(delta)
        psi = psi + spec.epsilon * delta
    return psi / np.linalg.norm(psi)


def make_initial_state(spec):
    """Pure density matrix for an :class:`InitialStateSpec`."""
    return projector(initial_ket(spec))


def partial_trace(rho, keep, dims):
    """Reduced density matrix over the subsystems listed in ``keep``.

    Parameters
    ----------
    rho : array_like
        Operator on the product space with subsystem dimensions ``dims``.
    keep : int or sequence of int
        Subsystems to keep, in any order; the result follows ascending order.
    dims : sequence of int
        Subsystem dimensions whose product equals ``rho.shape[0]``.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = [int(d) for d in dims]
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    if int(np.prod(dims)) != rho.shape[0]:
        raise ValueError(f"dims {dims} do not factor a dimension of {rho.shape[0]}")
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = rho.reshape(dims + dims)
    # Contract each traced subsystem's row index with its column index.
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out_idx = keep + [i + n for i in keep]
    res = np.einsum(t, row + col, out_idx)
    d_keep = int(np.prod([dims[i] for i in keep]))
    return res.reshape(d_keep, d_keep)

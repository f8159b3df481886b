import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulsebench.metrics import fidelity_pure
from pulsebench.qstate import (
    SX,
    SZ,
    InitialStateSpec,
    StateValidationError,
    ghz_ket,
    ket,
    make_initial_state,
    partial_trace,
    pauli_expectations,
    pauli_labels,
    projector,
    state_from_pauli_expectations,
    tensor_embed,
    validate_state,
)


def random_state(rng, dim, rank=None):
    rank = rank or dim
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_embed_sz_site0():
    out = tensor_embed(SZ, 0, 2)
    assert np.allclose(out, np.diag([1, 1, -1, -1]))


def test_embed_identity_any_site():
    for site in range(3):
        assert np.allclose(tensor_embed(np.eye(2), site, 3), np.eye(8))


def test_embed_sx_site1_flips_second_qubit():
    out = tensor_embed(SX, 1, 2) @ ket("00")
    assert np.allclose(out, ket("01"))


def test_embed_mixed_dims():
    op = np.diag(np.arange(3.0))
    out = tensor_embed(op, 1, 2, local_dims=[2, 3])
    assert np.allclose(out, np.kron(np.eye(2), op))


def test_embed_rejects_bad_site_and_shape():
    with pytest.raises(ValueError):
        tensor_embed(SZ, 2, 2)
    with pytest.raises(ValueError):
        tensor_embed(np.eye(3), 0, 2)


def test_pauli_expectations_ground_state():
    vals = dict(zip(pauli_labels(2), pauli_expectations(projector(ket("00")))))
    assert vals["ZI"] == pytest.approx(1) and vals["IZ"] == pytest.approx(1)
    assert vals["ZZ"] == pytest.approx(1)
    others = [v for k, v in vals.items() if k not in ("ZI", "IZ", "ZZ")]
    assert np.allclose(others, 0)


def test_pauli_expectations_maximally_mixed():
    assert np.allclose(pauli_expectations(np.eye(4) / 4), 0)


def test_pauli_expectations_phi_plus():
    rho = make_initial_state(InitialStateSpec("bell", "phi+"))
    vals = dict(zip(pauli_labels(2), pauli_expectations(rho)))
    # Direct trace evaluation: <XX> = 1, <YY> = -1, <ZZ> = 1.
    assert vals["XX"] == pytest.approx(1)
    assert vals["YY"] == pytest.approx(-1)
    assert vals["ZZ"] == pytest.approx(1)
    for lab in ("XI", "YI", "ZI", "IX", "IY", "IZ"):
        assert vals[lab] == pytest.approx(0, abs=1e-15)


def test_pauli_vector_length_and_roundtrip():
    rng = np.random.default_rng(0)
    rho = random_state(rng, 4)
    v = pauli_expectations(rho)
    assert v.shape == (15,)
    assert np.allclose(state_from_pauli_expectations(v, 2), rho)


def test_bell_corner_matrix():
    rho = make_initial_state(InitialStateSpec("bell", "phi+"))
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    assert np.allclose(rho, expected)


def test_perturbed_ghz_zero_epsilon_is_bell():
    a = make_initial_state(InitialStateSpec("perturbed_ghz", n_qubits=2, epsilon=0.0))
    b = make_initial_state(InitialStateSpec("bell", "phi+"))
    assert np.array_equal(a, b)


def test_perturbed_ghz_fidelity_golden():
    rho = make_initial_state(InitialStateSpec("perturbed_ghz", epsilon=0.05, seed=1))
    f = fidelity_pure(rho, ghz_ket(2))
    assert 0.99 < f < 1.0
    assert f == pytest.approx(0.9983708033872658, abs=1e-12)


def test_initial_state_labels():
    for label in ("00", "+0", "0+", "++", "phi+", "psi+", "ghz"):
        rho = make_initial_state(InitialStateSpec.from_label(label))
        validate_state(rho)
    with pytest.raises(ValueError):
        InitialStateSpec.from_label("11")


def test_partial_trace_bell_is_mixed():
    rho = make_initial_state(InitialStateSpec("bell", "phi+"))
    assert np.allclose(partial_trace(rho, 0, [2, 2]), np.eye(2) / 2)


def test_partial_trace_product():
    rng = np.random.default_rng(1)
    ra, rb = random_state(rng, 2), random_state(rng, 3)
    assert np.allclose(partial_trace(np.kron(ra, rb), 0, [2, 3]), ra)
    assert np.allclose(partial_trace(np.kron(ra, rb), 1, [2, 3]), rb)


def test_partial_trace_walk_state():
    coin = np.array([1, 1j]) / np.sqrt(2)
    pos = np.zeros(11)
    pos[0] = 1
    rho = np.kron(np.outer(coin, coin.conj()), np.outer(pos, pos))
    red = partial_trace(rho, 1, [2, 11])
    expected = np.zeros((11, 11))
    expected[0, 0] = 1
    assert np.allclose(red, expected)


def test_partial_trace_three_parties_against_einsum():
    rng = np.random.default_rng(2)
    rho = random_state(rng, 12)
    t = rho.reshape(2, 3, 2, 2, 3, 2)
    expected = np.einsum("abcdbf->acdf", t).reshape(4, 4)
    assert np.allclose(partial_trace(rho, [0, 2], [2, 3, 2]), expected)


def test_validate_state_rejects():
    with pytest.raises(StateValidationError):
        validate_state(np.array([[1, 1], [0, 0]]))
    with pytest.raises(StateValidationError):
        validate_state(np.eye(2))
    with pytest.raises(StateValidationError):
        validate_state(np.diag([1.5, -0.5]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_random_states_validate(seed, rank):
    rho = random_state(np.random.default_rng(seed), 4, rank)
    validate_state(rho)
    assert np.trace(partial_trace(rho, 1, [2, 2])).real == pytest.approx(1)

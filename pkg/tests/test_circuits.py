import json
import math

import numpy as np
import pytest

from paulisimp.channel import bit_flip_channel, depolarizing_channel, make_channel
from paulisimp.circuits import (
    Circuit,
    DensityMatrix,
    Gate,
    apply_channel,
    bell_pair_circuit,
    circuit_from_json,
    circuit_to_json,
    expectation_from_counts,
    expectation_from_distribution,
    expectation_pauli,
    layer_unitary,
    loop_rotation_circuit,
    parallel_average,
    permute_circuit,
    permute_state,
    propagate_through_pauli_layer,
    run_noisy,
    run_trajectories,
    sample_counts,
    two_bell_pairs_circuit,
    zero_state,
)
from paulisimp.pauli import decode_pauli
from paulisimp.symmetry import identity_permutation, reflection_permutation

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def dense_word(word: str) -> np.ndarray:
    out = PAULI[word[0]]
    for letter in word[1:]:
        out = np.kron(out, PAULI[letter])
    return out


def random_density(n, rng) -> DensityMatrix:
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    mat = a @ a.conj().T
    return DensityMatrix(n, mat / np.trace(mat))


def random_channel(n, rng):
    c = rng.random(4**n)
    return make_channel(n, c / c.sum())


# --- gates and circuits ---------------------------------------------------------


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("T", (1,))
    with pytest.raises(ValueError):
        Gate("H", (1, 2))
    with pytest.raises(ValueError):
        Gate("CZ", (1,))
    with pytest.raises(ValueError):
        Gate("CZ", (2, 2))
    with pytest.raises(ValueError):
        Gate("RX", (1,))
    with pytest.raises(ValueError):
        Gate("H", (1,), theta=0.5)
    Gate("RX", (1,), theta=0.5)


def test_circuit_validation():
    with pytest.raises(ValueError):
        Circuit(0, ())
    with pytest.raises(ValueError):
        Circuit(9, ())
    with pytest.raises(ValueError, match="outside"):
        Circuit(2, ((Gate("H", (3,)),),))
    with pytest.raises(ValueError, match="overlapping"):
        Circuit(2, ((Gate("H", (1,)), Gate("X", (1,))),))
    with pytest.raises(ValueError, match="noise slots"):
        Circuit(2, ((Gate("H", (1,)),),), (None, None))
    with pytest.raises(ValueError, match="acts on"):
        Circuit(2, ((Gate("H", (1,)),),), (depolarizing_channel(3, 0.1),))


def test_noise_defaults_to_none_per_layer():
    circ = bell_pair_circuit()
    assert circ.noise == (None, None)
    noisy = circ.with_noise((None, depolarizing_channel(2, 0.1)))
    assert noisy.noise[1] is not None
    assert noisy.without_noise().noise == (None, None)


def test_zero_rotations():
    circ = loop_rotation_circuit([0.3] * 8)
    flat = circ.zero_rotations()
    angles = [g.theta for layer in flat.layers for g in layer if g.kind == "RX"]
    assert angles == [0.0] * 8
    state = run_noisy(flat)
    assert state.probabilities()[0] == pytest.approx(1.0)


# --- unitaries -------------------------------------------------------------------


def test_single_qubit_embedding():
    u = layer_unitary((Gate("H", (2,)),), 2)
    expected = np.kron(I2, PAULI["I"] @ (np.array([[1, 1], [1, -1]]) / math.sqrt(2)))
    assert np.allclose(u, expected)


def test_cnot_truth_table():
    u = layer_unitary((Gate("CNOT", (1, 2)),), 2)
    # |00>->|00>, |01>->|01>, |10>->|11>, |11>->|10>
    expected = np.zeros((4, 4))
    for src, dst in [(0, 0), (1, 1), (2, 3), (3, 2)]:
        expected[dst, src] = 1.0
    assert np.allclose(u, expected)
    u_rev = layer_unitary((Gate("CNOT", (2, 1)),), 2)
    expected_rev = np.zeros((4, 4))
    for src, dst in [(0, 0), (1, 3), (2, 2), (3, 1)]:
        expected_rev[dst, src] = 1.0
    assert np.allclose(u_rev, expected_rev)


def test_cz_truth_table():
    u = layer_unitary((Gate("CZ", (1, 2)),), 2)
    assert np.allclose(u, np.diag([1.0, 1.0, 1.0, -1.0]))
    assert np.allclose(u, layer_unitary((Gate("CZ", (2, 1)),), 2))


def test_rx_matrix():
    theta = 0.7
    u = layer_unitary((Gate("RX", (1,), theta),), 1)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    assert np.allclose(u, np.array([[c, -1j * s], [-1j * s, c]]))
    u_pi = layer_unitary((Gate("RX", (1,), math.pi),), 1)
    assert np.allclose(u_pi, -1j * X)


def test_layer_unitary_commuting_gates():
    u = layer_unitary((Gate("X", (1,)), Gate("Z", (2,))), 2)
    assert np.allclose(u, np.kron(X, Z))


# --- states and channels -----------------------------------------------------------


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(2, np.eye(3, dtype=complex))
    bad_trace = DensityMatrix(1, 2 * np.eye(2, dtype=complex))
    with pytest.raises(ValueError, match="trace"):
        bad_trace.validate()
    not_herm = DensityMatrix(1, np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex))
    with pytest.raises(ValueError, match="Hermitian"):
        not_herm.validate()
    negative = DensityMatrix(1, np.diag([1.5, -0.5]).astype(complex))
    with pytest.raises(ValueError, match="eigenvalue"):
        negative.validate()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_apply_channel_matches_dense_conjugation(n):
    rng = np.random.default_rng(n)
    state = random_density(n, rng)
    channel = random_channel(n, rng)
    expected = np.zeros_like(state.mat)
    for code, c in enumerate(channel.coeffs):
        p = dense_word(decode_pauli(code, n))
        expected += c * (p @ state.mat @ p.conj().T)
    assert np.abs(apply_channel(state.mat, channel) - expected).max() < 1e-12


def test_run_noisy_preserves_state_invariants():
    circ = loop_rotation_circuit([0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6]).with_noise(
        (depolarizing_channel(4, 0.2), None, bit_flip_channel(4, [0.05] * 4), None)
    )
    out = run_noisy(circ)
    out.validate(atol=1e-9)


def test_run_noisy_matches_manual_evolution():
    circ = bell_pair_circuit().with_noise((None, depolarizing_channel(2, 0.3)))
    out = run_noisy(circ)
    mat = zero_state(2).mat
    for layer in circ.layers:
        u = layer_unitary(layer, 2)
        mat = u @ mat @ u.conj().T
    mat = apply_channel(mat, circ.noise[1])
    assert np.abs(out.mat - mat).max() < 1e-12


def test_run_noisy_rejects_mismatched_initial():
    with pytest.raises(ValueError):
        run_noisy(bell_pair_circuit(), zero_state(3))


def test_bell_state_expectations():
    state = run_noisy(bell_pair_circuit())
    assert expectation_pauli(state, "ZZ") == pytest.approx(1.0)
    assert expectation_pauli(state, "XX") == pytest.approx(1.0)
    assert expectation_pauli(state, "YY") == pytest.approx(-1.0)
    assert expectation_pauli(state, "ZI") == pytest.approx(0.0)


def test_two_bell_pairs():
    state = run_noisy(two_bell_pairs_circuit())
    assert expectation_pauli(state, "ZZII") == pytest.approx(1.0)
    assert expectation_pauli(state, "IIZZ") == pytest.approx(1.0)
    assert expectation_pauli(state, "ZIZI") == pytest.approx(0.0)


# --- expectations ----------------------------------------------------------------------


@pytest.mark.parametrize("word", ["ZZ", "XI", "YX", "IZ", "YY"])
def test_expectation_pauli_matches_dense_trace(word):
    rng = np.random.default_rng(17)
    state = random_density(2, rng)
    expected = float(np.real(np.trace(dense_word(word) @ state.mat)))
    assert expectation_pauli(state, word) == pytest.approx(expected, abs=1e-12)


def test_expectation_pauli_length_check():
    with pytest.raises(ValueError):
        expectation_pauli(zero_state(2), "Z")


def test_expectation_from_counts():
    assert expectation_from_counts({"00": 30, "11": 70}, "ZZ") == pytest.approx(1.0)
    assert expectation_from_counts({"00": 30, "11": 70}, "ZI") == pytest.approx(-0.4)
    assert expectation_from_counts({"01": 50, "10": 50}, "ZZ") == pytest.approx(-1.0)
    with pytest.raises(ValueError, match="not diagonal"):
        expectation_from_counts({"00": 1}, "XZ")


def test_expectation_from_distribution_matches_exact():
    rng = np.random.default_rng(23)
    state = random_density(2, rng)
    probs = state.probabilities()
    for word in ("ZZ", "ZI", "IZ", "II"):
        assert expectation_from_distribution(probs, word) == pytest.approx(
            expectation_pauli(state, word), abs=1e-9
        )
    with pytest.raises(ValueError, match="not diagonal"):
        expectation_from_distribution(probs, "XZ")
    with pytest.raises(ValueError, match="length"):
        expectation_from_distribution(probs[:3], "ZZ")


def test_sample_counts_deterministic():
    state = run_noisy(bell_pair_circuit())
    a = sample_counts(state, 1000, 7)
    b = sample_counts(state, 1000, 7)
    assert a == b
    assert sum(a.values()) == 1000
    assert set(a) <= {"00", "11"}


def test_trajectories_agree_with_exact_diagonal():
    circ = bell_pair_circuit().with_noise((None, bit_flip_channel(2, [0.1, 0.05])))
    counts = run_trajectories(circ, 4000, 3)
    assert sum(counts.values()) == 4000
    exact = expectation_pauli(run_noisy(circ), "ZZ")
    estimate = expectation_from_counts(counts, "ZZ")
    assert abs(estimate - exact) < 0.08
    assert run_trajectories(circ, 50, 3) == run_trajectories(circ, 50, 3)


# --- relabeling -------------------------------------------------------------------------


def test_permute_state_moves_basis_labels():
    mat = np.zeros((4, 4), dtype=complex)
    mat[1, 1] = 1.0  # |01><01|
    state = DensityMatrix(2, mat)
    swapped = permute_state(state, reflection_permutation(2))
    assert swapped.mat[2, 2] == pytest.approx(1.0)  # |10><10|


def test_permute_state_round_trip():
    rng = np.random.default_rng(5)
    state = random_density(3, rng)
    sigma = reflection_permutation(3)
    back = permute_state(permute_state(state, sigma), sigma.inverse())
    assert np.abs(back.mat - state.mat).max() < 1e-15


def test_permute_circuit_consistent_with_permute_state():
    circ = loop_rotation_circuit([0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7])
    sigma = reflection_permutation(4)
    direct = permute_state(run_noisy(circ), sigma)
    relabeled = run_noisy(permute_circuit(circ, sigma))
    assert np.abs(direct.mat - relabeled.mat).max() < 1e-12


def test_permute_circuit_keeps_noise_in_place():
    noise = (None, depolarizing_channel(2, 0.1))
    circ = bell_pair_circuit().with_noise(noise)
    moved = permute_circuit(circ, reflection_permutation(2))
    assert moved.noise == circ.noise
    assert moved.layers[1][0].targets == (2, 1)


def test_parallel_average_identity_cases():
    with pytest.raises(ValueError):
        parallel_average([])
    circ = bell_pair_circuit()
    with pytest.raises(ValueError, match="one relabeling"):
        parallel_average([circ], logical_perms=[None, None])
    avg = parallel_average([circ, circ])
    assert np.abs(avg.mat - run_noisy(circ).mat).max() < 1e-12


def test_parallel_average_maps_runs_back_to_logical_frame():
    circ = two_bell_pairs_circuit()
    sigma = reflection_permutation(4)
    avg = parallel_average(
        [circ, permute_circuit(circ, sigma)], logical_perms=[None, sigma]
    )
    assert np.abs(avg.mat - run_noisy(circ).mat).max() < 1e-12


def test_propagate_through_pauli_layer():
    ch = depolarizing_channel(2, 0.2)
    out = propagate_through_pauli_layer(ch, (Gate("X", (1,)), Gate("Z", (2,))))
    assert np.array_equal(out.coeffs, ch.coeffs)
    with pytest.raises(ValueError, match="non-Pauli"):
        propagate_through_pauli_layer(ch, (Gate("H", (1,)),))


# --- serialization ----------------------------------------------------------------------


def test_circuit_json_round_trip():
    circ = loop_rotation_circuit([0.1] * 8).with_noise(
        (None, depolarizing_channel(4, 0.2), None, bit_flip_channel(4, [0.01] * 4))
    )
    text = circuit_to_json(circ)
    json.loads(text)
    back = circuit_from_json(text)
    assert back.n == circ.n
    assert back.layers == circ.layers
    for a, b in zip(back.noise, circ.noise):
        if b is None:
            assert a is None
        else:
            # deserialisation re-validates, renormalising any ulp of sum drift
            assert np.abs(a.coeffs - b.coeffs).max() < 1e-15


def test_circuit_json_defaults_noise_to_none():
    text = json.dumps({"n": 2, "layers": [[{"kind": "H", "targets": [1]}]]})
    circ = circuit_from_json(text)
    assert circ.noise == (None,)

"""Exact density-matrix simulation of layered circuits with Pauli noise.

Circuits are layers of non-overlapping gates; an optional stochastic Pauli
channel sits after each layer, attached to physical qubit positions.  States
are dense 2^n x 2^n density matrices (n <= 8), but channels are applied as
sum_P c_P P rho P via bit-flip/phase index operations, never as 4^n x 4^n
superoperators.  Basis indices use qubit 1 as the most significant bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import PauliChannel, channel_from_json, channel_to_json, make_channel
from .pauli import encode_pauli, pauli_masks
from .symmetry import QubitPermutation

MAX_QUBITS = 8
GATE_KINDS = ("H", "X", "Y", "Z", "RX", "CZ", "CNOT")
_SINGLE = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        arity = 2 if self.kind in ("CZ", "CNOT") else 1
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError(f"{self.kind} targets must differ, got {self.targets}")
        if (self.kind == "RX") != (self.theta is not None):
            raise ValueError("theta is required for RX and only for RX")


@dataclass(frozen=True)
class Circuit:
    """Layered circuit; noise[k] (optional) applies after layers[k]."""

    n: int
    layers: tuple[tuple[Gate, ...], ...]
    noise: tuple[PauliChannel | None, ...] = ()

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"n={self.n} outside 1..{MAX_QUBITS}")
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        for k, layer in enumerate(layers):
            used: set[int] = set()
            for gate in layer:
                bad = [t for t in gate.targets if not 1 <= t <= self.n]
                if bad:
                    raise ValueError(f"layer {k}: target {bad[0]} outside 1..{self.n}")
                if used & set(gate.targets):
                    raise ValueError(f"layer {k}: overlapping gate targets")
                used |= set(gate.targets)
        noise = tuple(self.noise) if self.noise else (None,) * len(layers)
        if len(noise) != len(layers):
            raise ValueError(
                f"{len(noise)} noise slots for {len(layers)} layers"
            )
        for k, ch in enumerate(noise):
            if ch is not None and ch.n != self.n:
                raise ValueError(f"layer {k}: channel acts on {ch.n} qubits, not {self.n}")
        object.__setattr__(self, "noise", noise)

    def with_noise(self, channels) -> "Circuit":
        return Circuit(self.n, self.layers, tuple(channels))

    def without_noise(self) -> "Circuit":
        return Circuit(self.n, self.layers, (None,) * len(self.layers))

    def zero_rotations(self) -> "Circuit":
        """Same structure with every rotation angle set to zero."""
        layers = tuple(
            tuple(
                Gate(g.kind, g.targets, 0.0) if g.kind == "RX" else g
                for g in layer
            )
            for layer in self.layers
        )
        return Circuit(self.n, layers, self.noise)


@dataclass(frozen=True)
class DensityMatrix:
    n: int
    mat: np.ndarray

    def __post_init__(self):
        if self.mat.shape != (2**self.n, 2**self.n):
            raise ValueError(f"expected shape {(2**self.n,) * 2}, got {self.mat.shape}")

    def validate(self, atol: float = 1e-9):
        """Hermiticity, unit trace, positive semidefiniteness."""
        if abs(np.trace(self.mat) - 1.0) > atol:
            raise ValueError(f"trace {np.trace(self.mat)} differs from 1")
        if np.abs(self.mat - self.mat.conj().T).max() > atol:
            raise ValueError("matrix is not Hermitian")
        eigs = np.linalg.eigvalsh(self.mat)
        if eigs.min() < -atol:
            raise ValueError(f"negative eigenvalue {eigs.min()}")

    def probabilities(self) -> np.ndarray:
        p = np.clip(np.real(np.diag(self.mat)), 0.0, None)
        return p / p.sum()


def zero_state(n: int) -> DensityMatrix:
    mat = np.zeros((2**n, 2**n), dtype=complex)
    mat[0, 0] = 1.0
    return DensityMatrix(n, mat)


def _embed_single(u2: np.ndarray, qubit: int, n: int) -> np.ndarray:
    mats = [u2 if q == qubit else np.eye(2, dtype=complex) for q in range(1, n + 1)]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _gate_unitary(gate: Gate, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    if gate.kind in _SINGLE:
        return _embed_single(_SINGLE[gate.kind], gate.targets[0], n)
    if gate.kind == "RX":
        c, s = np.cos(gate.theta / 2), np.sin(gate.theta / 2)
        u2 = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        return _embed_single(u2, gate.targets[0], n)
    bit = [1 << (n - t) for t in gate.targets]
    if gate.kind == "CZ":
        both = ((idx & bit[0]) != 0) & ((idx & bit[1]) != 0)
        return np.diag(np.where(both, -1.0, 1.0)).astype(complex)
    # CNOT: flip target bit where control bit is set
    flipped = np.where((idx & bit[0]) != 0, idx ^ bit[1], idx)
    u = np.zeros((2**n, 2**n), dtype=complex)
    u[flipped, idx] = 1.0
    return u


def layer_unitary(layer: tuple[Gate, ...], n: int) -> np.ndarray:
    u = np.eye(2**n, dtype=complex)
    for gate in layer:
        u = _gate_unitary(gate, n) @ u
    return u


@lru_cache(maxsize=64)
def _parity_table(n: int) -> np.ndarray:
    """parity[k] = popcount(k) mod 2 for k < 2^n."""
    par = np.zeros(2**n, dtype=np.int8)
    for b in range(n):
        par ^= (np.arange(2**n) >> b).astype(np.int8) & 1
    return par


def apply_channel(mat: np.ndarray, channel: PauliChannel) -> np.ndarray:
    """sum_P c_P P rho P via index gathers and sign masks."""
    n = channel.n
    x, z = pauli_masks(n)
    par = _parity_table(n)
    idx = np.arange(2**n)
    out = np.zeros_like(mat)
    for p in np.nonzero(channel.coeffs)[0]:
        shifted = idx ^ x[p]
        signs = 1.0 - 2.0 * par[z[p] & shifted]
        gathered = mat[np.ix_(shifted, shifted)]
        out += channel.coeffs[p] * (signs[:, None] * signs[None, :]) * gathered
    return out


def run_noisy(circuit: Circuit, initial: DensityMatrix | None = None) -> DensityMatrix:
    """Evolve layer by layer, applying each layer's channel after its gates.

    Raises:
        RuntimeError: naming the layer index if the state loses unit trace or
            Hermiticity along the way.
    """
    state = initial if initial is not None else zero_state(circuit.n)
    if state.n != circuit.n:
        raise ValueError("initial state size does not match circuit")
    mat = state.mat.copy()
    for k, layer in enumerate(circuit.layers):
        u = layer_unitary(layer, circuit.n)
        mat = u @ mat @ u.conj().T
        if circuit.noise[k] is not None:
            mat = apply_channel(mat, circuit.noise[k])
        if abs(np.trace(mat) - 1.0) > 1e-9 or np.abs(mat - mat.conj().T).max() > 1e-9:
            raise RuntimeError(f"state invariant violated after layer {k}")
    return DensityMatrix(circuit.n, mat)


def expectation_pauli(state: DensityMatrix, word: str) -> float:
    """Tr(P rho) for a Pauli word observable (Hermitian, so real)."""
    n = state.n
    if len(word) != n:
        raise ValueError(f"observable length {len(word)} != n={n}")
    code = encode_pauli(word)
    x, z = pauli_masks(n)
    par = _parity_table(n)
    idx = np.arange(2**n)
    phases = (1.0 - 2.0 * par[z[code] & idx]) * (1j) ** word.count("Y")
    value = complex(np.sum(phases * state.mat[idx, idx ^ x[code]]))
    if abs(value.imag) > 1e-9:
        raise ValueError(f"non-real expectation {value} for word {word}")
    return value.real


def expectation_from_counts(counts: dict, word: str) -> float:
    """Estimate Tr(P rho) from computational-basis counts; Z-type words only."""
    if any(letter in "XY" for letter in word):
        raise ValueError(f"word {word} is not diagonal in the measurement basis")
    n = len(word)
    z = encode_pauli(word)
    _, zmask = pauli_masks(n)
    par = _parity_table(n)
    total = 0
    acc = 0.0
    for bits, c in counts.items():
        b = int(bits, 2)
        acc += c * (1.0 - 2.0 * float(par[zmask[z] & b]))
        total += c
    return acc / total


def expectation_from_distribution(probs, word: str) -> float:
    """Tr(P rho) from an outcome distribution; Z-type words only."""
    if any(letter in "XY" for letter in word):
        raise ValueError(f"word {word} is not diagonal in the measurement basis")
    n = len(word)
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (2**n,):
        raise ValueError(f"expected distribution of length {2**n}")
    z = encode_pauli(word)
    _, zmask = pauli_masks(n)
    par = _parity_table(n)
    signs = 1.0 - 2.0 * par[zmask[z] & np.arange(2**n)]
    return float(signs @ probs)


def sample_counts(state: DensityMatrix, shots: int, seed) -> dict[str, int]:
    """Multinomial draw from the computational-basis distribution."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = state.probabilities()
    draws = rng.multinomial(shots, probs)
    return {
        format(k, f"0{state.n}b"): int(v) for k, v in enumerate(draws) if v
    }


def run_trajectories(circuit: Circuit, shots: int, seed) -> dict[str, int]:
    """Shot sampler: one Pauli per channel per shot on a statevector.

    Agrees with the exact diagonal of :func:`run_noisy` to within binomial
    fluctuation; exists for shot-level experiments.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = circuit.n
    unitaries = [layer_unitary(layer, n) for layer in circuit.layers]
    x, z = pauli_masks(n)
    par = _parity_table(n)
    idx = np.arange(2**n)
    counts: dict[str, int] = {}
    for _ in range(shots):
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
        for u, channel in zip(unitaries, circuit.noise):
            psi = u @ psi
            if channel is not None:
                p = rng.choice(channel.coeffs.size, p=channel.coeffs)
                if p:
                    signs = 1.0 - 2.0 * par[z[p] & idx]
                    psi = signs * psi
                    psi = psi[idx ^ x[p]]
        probs = np.abs(psi) ** 2
        outcome = rng.choice(2**n, p=probs / probs.sum())
        key = format(outcome, f"0{n}b")
        counts[key] = counts.get(key, 0) + 1
    return counts


def _bit_permutation_table(perm: QubitPermutation, n: int) -> np.ndarray:
    """table[b] = basis index with the bit of qubit i moved to position perm(i)."""
    idx = np.arange(2**n)
    out = np.zeros_like(idx)
    for i in range(1, n + 1):
        bit = (idx >> (n - i)) & 1
        out |= bit << (n - perm(i))
    return out


def permute_state(state: DensityMatrix, perm: QubitPermutation) -> DensityMatrix:
    """Relabel qubits of a state: qubit i of the input becomes qubit perm(i)."""
    if perm.n != state.n:
        raise ValueError("permutation size does not match state")
    inv = _bit_permutation_table(perm.inverse(), state.n)
    return DensityMatrix(state.n, state.mat[np.ix_(inv, inv)])


def permute_circuit(circuit: Circuit, perm: QubitPermutation) -> Circuit:
    """Relabel gate targets by perm.  Noise stays on physical positions:
    the hardware channel is fixed while the logical circuit moves."""
    if perm.n != circuit.n:
        raise ValueError("permutation size does not match circuit")
    layers = tuple(
        tuple(Gate(g.kind, tuple(perm(t) for t in g.targets), g.theta) for g in layer)
        for layer in circuit.layers
    )
    return Circuit(circuit.n, layers, circuit.noise)


def parallel_average(
    circuits,
    initial: DensityMatrix | None = None,
    logical_perms=None,
) -> DensityMatrix:
    """Equal-weight average of runs, each mapped back to the logical frame.

    ``logical_perms[i]`` is the relabeling that was applied to the logical
    circuit to obtain ``circuits[i]``; its inverse is applied to that run's
    output so all copies are averaged in one frame.  All circuits must
    implement the same logical unitary (caller's responsibility).
    """
    circuits = list(circuits)
    if not circuits:
        raise ValueError("cannot average zero circuits")
    if logical_perms is None:
        logical_perms = [None] * len(circuits)
    if len(logical_perms) != len(circuits):
        raise ValueError("one relabeling per circuit required")
    n = circuits[0].n
    acc = np.zeros((2**n, 2**n), dtype=complex)
    for circ, perm in zip(circuits, logical_perms):
        out = run_noisy(circ, initial)
        if perm is not None:
            out = permute_state(out, perm.inverse())
        acc += out.mat
    return DensityMatrix(n, acc / len(circuits))


def propagate_through_pauli_layer(channel: PauliChannel, layer) -> PauliChannel:
    """Push a stochastic Pauli channel through a layer of Pauli gates.

    Conjugating each mixture term P rho P by a Pauli layer only introduces
    signs that cancel in pairs, so the coefficients are unchanged.  Raises on
    any non-Pauli gate.
    """
    for gate in layer:
        if gate.kind not in ("X", "Y", "Z"):
            raise ValueError(
                f"layer contains non-Pauli gate {gate.kind}; coefficients would change"
            )
    return PauliChannel(channel.n, channel.coeffs.copy())


# --- circuit serialization ---------------------------------------------------


def circuit_to_json(circuit: Circuit) -> str:
    def gate_obj(g: Gate) -> dict:
        obj = {"kind": g.kind, "targets": list(g.targets)}
        if g.theta is not None:
            obj["theta"] = float(g.theta)
        return obj

    payload = {
        "n": circuit.n,
        "layers": [[gate_obj(g) for g in layer] for layer in circuit.layers],
        "noise": [
            None if ch is None else json.loads(channel_to_json(ch))
            for ch in circuit.noise
        ],
    }
    return json.dumps(payload, separators=(",", ":"))


def circuit_from_json(text: str) -> Circuit:
    data = json.loads(text)
    layers = tuple(
        tuple(
            Gate(g["kind"], tuple(g["targets"]), g.get("theta")) for g in layer
        )
        for layer in data["layers"]
    )
    noise = tuple(
        None if ch is None else make_channel(int(ch["n"]), ch["coeffs"])
        for ch in data.get("noise", [None] * len(layers))
    )
    return Circuit(int(data["n"]), layers, noise)


# --- reference circuits ------------------------------------------------------


def bell_pair_circuit() -> Circuit:
    """Two-qubit Bell preparation: H on 1, then CNOT 1 -> 2."""
    return Circuit(2, ((Gate("H", (1,)),), (Gate("CNOT", (1, 2)),)))


def two_bell_pairs_circuit() -> Circuit:
    """Bell pairs on (1,2) and (3,4) of a 4-qubit loop."""
    return Circuit(
        4,
        (
            (Gate("H", (1,)), Gate("H", (3,))),
            (Gate("CNOT", (1, 2)), Gate("CNOT", (3, 4))),
        ),
    )


def loop_rotation_circuit(thetas) -> Circuit:
    """Four-qubit alternating local-RX / loop-CZ circuit (8 angles).

    Layers: RX(t1..t4), CZ(1,2) CZ(3,4), RX(t5..t8), CZ(2,3) CZ(1,4).
    """
    t = [float(v) for v in thetas]
    if len(t) != 8:
        raise ValueError(f"need 8 angles, got {len(t)}")
    return Circuit(
        4,
        (
            tuple(Gate("RX", (q,), t[q - 1]) for q in range(1, 5)),
            (Gate("CZ", (1, 2)), Gate("CZ", (3, 4))),
            tuple(Gate("RX", (q,), t[q + 3]) for q in range(1, 5)),
            (Gate("CZ", (2, 3)), Gate("CZ", (1, 4))),
        ),
    )

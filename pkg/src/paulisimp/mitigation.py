"""Measurement-error calibration and noise-estimation mitigation.

The readout model is a distribution over bit-flip patterns: preparing basis
state k yields outcome k XOR pattern.  A transition matrix S is
column-stochastic with S[j][k] = P(observe j | prepared k); mitigation solves
S x = p_noisy and projects back onto the simplex.  Symmetric calibration
samples one representative per orbit of basis states under a qubit-relabeling
group and fills the remaining columns by the group action, cutting the sample
budget from 2^n states to the number of orbits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuits import (
    Circuit,
    expectation_from_counts,
    expectation_from_distribution,
    expectation_pauli,
    run_noisy,
    sample_counts,
)
from .symmetry import SymmetryGroup, word_table

CONDITION_LIMIT = 1e8
MIN_LAMBDA = 0.1
MIN_IDEAL_EXPECTATION = 0.1


@dataclass(frozen=True)
class ReadoutNoiseModel:
    """Correlated classical readout noise as flip-pattern probabilities.

    flip_probs[m] is the probability that the observed bitstring is the
    prepared one XOR m (qubit 1 = most significant bit).
    """

    n: int
    flip_probs: np.ndarray

    def __post_init__(self):
        if self.flip_probs.shape != (2**self.n,):
            raise ValueError(f"need {2**self.n} flip probabilities")
        if np.any(self.flip_probs < 0) or abs(self.flip_probs.sum() - 1.0) > 1e-9:
            raise ValueError("flip probabilities must form a distribution")
        self.flip_probs.flags.writeable = False

    def transition_matrix(self) -> np.ndarray:
        """Exact S: column k is the flip distribution XOR-shifted by k."""
        idx = np.arange(2**self.n)
        return self.flip_probs[idx[:, None] ^ idx[None, :]]


def independent_flip_model(n: int, p) -> ReadoutNoiseModel:
    """Independent per-qubit flip probabilities (scalar or per-qubit list)."""
    ps = np.full(n, float(p)) if np.isscalar(p) else np.asarray(p, dtype=float)
    if ps.shape != (n,):
        raise ValueError(f"need one probability per qubit, got {ps.shape}")
    if np.any((ps < 0) | (ps > 1)):
        raise ValueError("flip probabilities must lie in [0, 1]")
    probs = np.ones(1)
    for q in range(n):
        probs = np.kron(probs, np.array([1.0 - ps[q], ps[q]]))
    return ReadoutNoiseModel(n, probs)


def loop_correlated_flip_model(
    n: int, p: float, pair_weight: float
) -> ReadoutNoiseModel:
    """Independent flips mixed with correlated flips of loop-adjacent pairs.

    With probability ``pair_weight`` a uniformly chosen adjacent pair (around
    the closed loop) flips jointly; otherwise qubits flip independently with
    probability p.  Uniform pair weighting keeps the model invariant under
    the full loop symmetry.
    """
    if not 0 <= pair_weight <= 1:
        raise ValueError("pair_weight must lie in [0, 1]")
    if not 0 <= p <= 1:
        raise ValueError("flip probability must lie in [0, 1]")
    # build the independent part from pattern weights so that patterns related
    # by a relabeling get bit-identical probabilities
    weight = np.array([bin(m).count("1") for m in range(2**n)])
    base = (1.0 - p) ** (n - weight) * p**weight
    probs = (1.0 - pair_weight) * base
    pairs = [(q, q % n + 1) for q in range(1, n + 1)]
    for a, b in pairs:
        mask = (1 << (n - a)) | (1 << (n - b))
        probs[mask] += pair_weight / len(pairs)
    return ReadoutNoiseModel(n, probs)


def sample_readout(
    model: ReadoutNoiseModel, state_index: int, shots: int, rng
) -> np.ndarray:
    """Empirical outcome distribution for one prepared basis state."""
    pattern_counts = rng.multinomial(shots, model.flip_probs)
    out = np.zeros(2**model.n)
    idx = np.arange(2**model.n)
    out[idx ^ state_index] = pattern_counts / shots
    return out


@dataclass(frozen=True)
class TransitionMatrix:
    """Column-stochastic calibration matrix with its sample budget."""

    n: int
    matrix: np.ndarray
    shots_per_column: tuple[int, ...]

    def __post_init__(self):
        dim = 2**self.n
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix")
        if np.any(self.matrix < 0):
            raise ValueError("negative transition probability")
        if np.abs(self.matrix.sum(axis=0) - 1.0).max() > 1e-9:
            raise ValueError("columns must each sum to 1")
        if len(self.shots_per_column) != dim:
            raise ValueError("need one shot count per column")
        self.matrix.flags.writeable = False

    @property
    def total_samples(self) -> int:
        return int(sum(self.shots_per_column))


def calibrate_full(
    model: ReadoutNoiseModel, shots_per_state: int, seed
) -> TransitionMatrix:
    """One calibration circuit per basis state: 2^n * shots_per_state samples."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim = 2**model.n
    cols = np.empty((dim, dim))
    for k in range(dim):
        cols[:, k] = sample_readout(model, k, shots_per_state, rng)
    return TransitionMatrix(model.n, cols, (shots_per_state,) * dim)


def _orbit_structure(group: SymmetryGroup):
    """Representatives and per-state coset maps of the bitstring action."""
    tables = [word_table(g, 2) for g in group.elements]
    dim = 2**group.n
    rep_of = np.full(dim, -1, dtype=np.int64)
    coset: list[int] = [0] * dim
    reps = []
    for state in range(dim):
        if rep_of[state] >= 0:
            continue
        reps.append(state)
        for gi, t in enumerate(tables):
            member = int(t[state])
            if rep_of[member] < 0:
                rep_of[member] = state
                coset[member] = gi
    return reps, rep_of, coset, tables


def calibrate_symmetric(
    model: ReadoutNoiseModel,
    group: SymmetryGroup,
    shots_per_rep: int,
    seed,
) -> TransitionMatrix:
    """Calibrate one representative per orbit; remaining columns follow by
    the group action.

    The representative's empirical column is averaged over its stabilizer
    (the mappings that fix it), which makes the assembled matrix exactly
    invariant under the group's simultaneous row/column action.  Total budget
    is (number of orbits) * shots_per_rep.  For the trivial group this
    reduces to :func:`calibrate_full`.
    """
    if group.n != model.n:
        raise ValueError("group size does not match noise model")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim = 2**model.n
    reps, rep_of, coset, tables = _orbit_structure(group)
    cols = np.empty((dim, dim))
    shots = [0] * dim
    averaged: dict[int, np.ndarray] = {}
    for r in reps:
        raw = sample_readout(model, r, shots_per_rep, rng)
        stab = [t for t in tables if int(t[r]) == r]
        stacked = np.empty((len(stab), dim))
        for row, t in enumerate(stab):
            stacked[row, t] = raw
        # Sorting before summing makes the sum independent of element order,
        # so equivalent matrix entries come out bit-identical and the
        # assembled matrix is exactly invariant under the group action.
        stacked.sort(axis=0)
        averaged[r] = stacked.sum(axis=0) / len(stab)
        shots[r] = shots_per_rep
    for state in range(dim):
        t = tables[coset[state]]
        col = np.zeros(dim)
        col[t] = averaged[int(rep_of[state])]
        cols[:, state] = col
    return TransitionMatrix(model.n, cols, tuple(shots))


def mitigate_distribution(
    calibration: TransitionMatrix, noisy: np.ndarray
) -> tuple[np.ndarray, dict]:
    """Invert the calibration on a measured distribution.

    Solves S x = p (least squares if S is ill-conditioned past 1e8), clips
    negatives, renormalises.  Diagnostics report the clipped mass, condition
    number, and whether the fallback was used.
    """
    noisy = np.asarray(noisy, dtype=float)
    dim = 2**calibration.n
    if noisy.shape != (dim,):
        raise ValueError(f"expected distribution of length {dim}")
    cond = float(np.linalg.cond(calibration.matrix))
    used_lstsq = cond > CONDITION_LIMIT
    if used_lstsq:
        x = np.linalg.lstsq(calibration.matrix, noisy, rcond=None)[0]
    else:
        x = np.linalg.solve(calibration.matrix, noisy)
    clipped_mass = float(-x[x < 0].sum())
    x = np.clip(x, 0.0, None)
    total = x.sum()
    if total <= 0:
        raise ValueError("mitigated distribution vanished after clipping")
    x /= total
    diagnostics = {
        "condition_number": cond,
        "used_lstsq": used_lstsq,
        "clipped_mass": clipped_mass,
    }
    return x, diagnostics


def tvd(p, q) -> float:
    """Total variation distance between two distributions."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class MitigationResult:
    """One mitigation outcome against a known ideal distribution."""

    p_mitigated: np.ndarray
    tvd_before: float
    tvd_after: float
    expectation_error_before: float | None
    expectation_error_after: float | None
    samples_used: int
    diagnostics: dict


def mitigate_and_score(
    calibration: TransitionMatrix,
    noisy: np.ndarray,
    ideal: np.ndarray,
    observable: str | None = None,
) -> MitigationResult:
    """Invert the calibration and score the result against the ideal.

    When ``observable`` (a Z-type word) is given, the expectation errors
    before and after mitigation are included.
    """
    mitigated, diagnostics = mitigate_distribution(calibration, noisy)
    err_before = err_after = None
    if observable is not None:
        reference = expectation_from_distribution(ideal, observable)
        err_before = abs(
            expectation_from_distribution(noisy, observable) - reference
        )
        err_after = abs(
            expectation_from_distribution(mitigated, observable) - reference
        )
    return MitigationResult(
        p_mitigated=mitigated,
        tvd_before=tvd(noisy, ideal),
        tvd_after=tvd(mitigated, ideal),
        expectation_error_before=err_before,
        expectation_error_after=err_after,
        samples_used=calibration.total_samples,
        diagnostics=diagnostics,
    )


def apply_readout_noise(model: ReadoutNoiseModel, probs: np.ndarray) -> np.ndarray:
    """Exact noisy distribution S_true @ probs."""
    return model.transition_matrix() @ np.asarray(probs, dtype=float)


# --- noise-estimation (depolarizing-parameter) mitigation ---------------------


def estimate_lambda(
    circuit: Circuit,
    observable: str,
    shots: int | None = None,
    seed=None,
) -> float:
    """Depolarizing parameter from the circuit's zero-rotation variant.

    The estimation circuit is the input with every rotation angle set to 0;
    its noiseless observable value must be at least 0.1 in magnitude.  The
    returned lambda' = noisy/ideal is clamped to [-1, 1].

    Raises:
        ValueError: unusable estimation circuit or rejected run
            (lambda' < 0.1).
    """
    estimation = circuit.zero_rotations()
    ideal = expectation_pauli(run_noisy(estimation.without_noise()), observable)
    if abs(ideal) < MIN_IDEAL_EXPECTATION:
        raise ValueError(
            f"estimation circuit unusable: ideal expectation {ideal} below "
            f"{MIN_IDEAL_EXPECTATION} in magnitude"
        )
    state = run_noisy(estimation)
    if shots is None:
        noisy = expectation_pauli(state, observable)
    else:
        counts = sample_counts(state, shots, seed)
        noisy = expectation_from_counts(counts, observable)
    lam = float(np.clip(noisy / ideal, -1.0, 1.0))
    if lam < MIN_LAMBDA:
        raise ValueError(f"rejected run: estimated lambda {lam} below {MIN_LAMBDA}")
    return lam


def mitigate_expectation(noisy_value: float, lam: float) -> float:
    """Rescale a noisy expectation by the estimated depolarizing parameter."""
    if lam < MIN_LAMBDA:
        raise ValueError(f"rejected run: lambda {lam} below {MIN_LAMBDA}")
    return float(np.clip(noisy_value / lam, -1.0, 1.0))


# --- serialization -----------------------------------------------------------


def transition_matrix_to_json(t: TransitionMatrix) -> str:
    return json.dumps(
        {
            "n": t.n,
            "columns": [[float(v) for v in t.matrix[:, k]] for k in range(2**t.n)],
            "shots_per_column": list(t.shots_per_column),
        },
        separators=(",", ":"),
    )


def transition_matrix_from_json(text: str) -> TransitionMatrix:
    data = json.loads(text)
    n = int(data["n"])
    matrix = np.array(data["columns"], dtype=float).T
    return TransitionMatrix(n, matrix, tuple(int(s) for s in data["shots_per_column"]))

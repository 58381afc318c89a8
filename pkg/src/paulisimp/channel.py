"""Stochastic Pauli channels as probability vectors over Pauli words.

A channel rho -> sum_P c_P P rho P is stored as the coefficient vector c of
length 4^n indexed by the encoding of :mod:`paulisimp.pauli`.  Coefficients
are a probability distribution: non-negative, summing to one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .pauli import pauli_masks

SUM_TOLERANCE = 1e-9
COMPLEXITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PauliChannel:
    """Immutable n-qubit stochastic Pauli channel.

    Attributes:
        n: number of qubits.
        coeffs: read-only float array of length 4^n; coeffs[0] weights the
            identity word.
    """

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs.flags.writeable = False

    @property
    def identity_coefficient(self) -> float:
        return float(self.coeffs[0])

    @property
    def nonidentity(self) -> np.ndarray:
        return self.coeffs[1:]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliChannel)
            and self.n == other.n
            and np.array_equal(self.coeffs, other.coeffs)
        )


def make_channel(n: int, coeffs) -> PauliChannel:
    """Validate and build a channel from raw coefficients.

    The sum may deviate from one by at most 1e-9 and is renormalised away;
    larger deviations and negative coefficients are rejected.
    """
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    c = np.asarray(coeffs, dtype=float).copy()
    if c.shape != (4**n,):
        raise ValueError(f"expected 4^{n}={4**n} coefficients, got shape {c.shape}")
    if np.any(c < 0):
        worst = int(np.argmin(c))
        raise ValueError(f"negative coefficient {c[worst]} at index {worst}")
    total = float(c.sum())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise ValueError(f"coefficients sum to {total}, not 1 within {SUM_TOLERANCE}")
    if total != 1.0:
        c /= total
    return PauliChannel(n, c)


def identity_channel(n: int) -> PauliChannel:
    c = np.zeros(4**n)
    c[0] = 1.0
    return PauliChannel(n, c)


def uniform_channel(n: int, eta: float) -> PauliChannel:
    """Channel with every non-identity coefficient equal to eta.

    The identity absorbs the remainder 1 - (4^n - 1) eta, which must be
    non-negative.
    """
    k = 4**n - 1
    if not 0.0 <= eta <= 1.0 / k:
        raise ValueError(f"uniform coefficient {eta} outside [0, 1/{k}]")
    c = np.full(4**n, eta)
    c[0] = 1.0 - k * eta
    return PauliChannel(n, c)


def depolarizing_channel(n: int, lam: float) -> PauliChannel:
    """Global depolarizing channel acting as (1-lam) rho + lam I/2^n.

    Equivalently the Pauli mixture with c_P = lam/4^n on every non-identity
    word: (1/4^n) sum_P P rho P equals Tr(rho) I/2^n, so the uniform
    coefficient lam/4^n reproduces the mixing term exactly.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"depolarizing parameter {lam} outside [0, 1]")
    return uniform_channel(n, lam / 4**n)


def bit_flip_channel(n: int, probs) -> PauliChannel:
    """Independent X flips with probability probs[i] on qubit i+1.

    The coefficients live on {I, X} words only: the word flipping exactly
    the set F gets weight prod_{i in F} p_i prod_{i not in F} (1 - p_i).
    """
    ps = np.asarray(probs, dtype=float)
    if ps.shape != (n,):
        raise ValueError(f"need one flip probability per qubit, got {ps.shape}")
    if np.any((ps < 0) | (ps > 1)):
        raise ValueError("flip probabilities must lie in [0, 1]")
    coeffs = np.zeros(4**n)
    weights = np.ones(1)
    codes = np.zeros(1, dtype=np.int64)
    for i in range(n):
        weights = np.concatenate(
            [weights * (1.0 - ps[i]), weights * ps[i]]
        )
        codes = np.concatenate([codes * 4, codes * 4 + 1])
    coeffs[codes] = weights
    return PauliChannel(n, coeffs)


def depolarizing_parameter(eta: float, n: int) -> float:
    """Action-convention lam of the uniform-coefficient-eta channel (= 4^n eta)."""
    return (4**n) * eta


def average_channels(channels) -> PauliChannel:
    """Equal-weight average; the effective channel of a parallel set."""
    channels = list(channels)
    if not channels:
        raise ValueError("cannot average zero channels")
    n = channels[0].n
    if any(ch.n != n for ch in channels):
        raise ValueError("channels act on different qubit counts")
    mean = np.mean([ch.coeffs for ch in channels], axis=0)
    return PauliChannel(n, mean)


def compose_channels(second: PauliChannel, first: PauliChannel) -> PauliChannel:
    """Channel equal to applying ``first`` then ``second``.

    Pauli words multiply by XOR of their (x, z) masks; conjugation phases
    cancel, so the composition is the convolution of the coefficient vectors
    over that group.
    """
    if second.n != first.n:
        raise ValueError("channels act on different qubit counts")
    n = first.n
    x, z = pauli_masks(n)
    # lookup from (x_mask, z_mask) back to the word's code
    code_of = np.empty(4**n, dtype=np.int64)
    code_of[x * 2**n + z] = np.arange(4**n)
    out = np.zeros(4**n)
    for p in np.nonzero(second.coeffs)[0]:
        prod = code_of[(x ^ x[p]) * 2**n + (z ^ z[p])]
        np.add.at(out, prod, second.coeffs[p] * first.coeffs)
    return PauliChannel(n, out)


def channel_complexity(
    channel: PauliChannel,
    tol: float = COMPLEXITY_TOLERANCE,
    include_identity: bool = False,
) -> int:
    """Number of distinct coefficient values, up to single-link clustering.

    Sorted values closer than ``tol`` to their neighbour merge into one
    cluster.  By default the identity coefficient is excluded from the count;
    ``include_identity=True`` counts it like any other value.
    """
    values = channel.coeffs if include_identity else channel.nonidentity
    values = np.sort(np.asarray(values))
    if values.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(values) > tol))


def channel_distance(a: PauliChannel, b: PauliChannel) -> float:
    """Total variation distance between the Pauli coefficient distributions."""
    if a.n != b.n:
        raise ValueError("channels act on different qubit counts")
    return 0.5 * float(np.abs(a.coeffs - b.coeffs).sum())


def channel_to_json(channel: PauliChannel) -> str:
    """Serialise as {"n": ..., "coeffs": [...]} with round-trip-exact floats."""
    return json.dumps(
        {"n": channel.n, "coeffs": [float(c) for c in channel.coeffs]},
        separators=(",", ":"),
    )


def channel_from_json(text: str) -> PauliChannel:
    data = json.loads(text)
    if set(data) != {"n", "coeffs"}:
        raise ValueError(f"unexpected channel fields {sorted(data)}")
    return make_channel(int(data["n"]), data["coeffs"])

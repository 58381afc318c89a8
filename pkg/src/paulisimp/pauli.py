"""Pauli-string labels and their canonical integer encoding.

An n-qubit Pauli word is a string over the letters I, X, Y, Z with qubit 1
written first.  Words are encoded as base-4 integers with I=0, X=1, Y=2, Z=3
and qubit 1 as the most significant digit, so "XZ" (n=2) encodes to
1*4 + 3 = 7.  All channel coefficient arrays in this package are indexed by
that encoding.
"""

from __future__ import annotations

from itertools import combinations, product

import numpy as np

LETTERS = "IXYZ"
_DIGIT = {"I": 0, "X": 1, "Y": 2, "Z": 3}


def encode_pauli(word: str) -> int:
    """Encode a Pauli word to its base-4 integer index.

    Args:
        word: string over IXYZ, qubit 1 first.

    Raises:
        ValueError: on an invalid symbol, naming the offending position.
    """
    code = 0
    for pos, letter in enumerate(word):
        digit = _DIGIT.get(letter)
        if digit is None:
            raise ValueError(
                f"invalid Pauli symbol {letter!r} at position {pos + 1} "
                f"(expected one of I, X, Y, Z)"
            )
        code = code * 4 + digit
    return code


def decode_pauli(code: int, n: int) -> str:
    """Inverse of :func:`encode_pauli` for an n-qubit word."""
    if not 0 <= code < 4**n:
        raise ValueError(f"code {code} out of range for n={n}")
    letters = []
    for _ in range(n):
        letters.append(LETTERS[code % 4])
        code //= 4
    return "".join(reversed(letters))


def pauli_weight(code: int) -> int:
    """Number of non-identity letters in the encoded word."""
    w = 0
    while code:
        if code % 4:
            w += 1
        code //= 4
    return w


def pauli_support(code: int, n: int) -> tuple[int, ...]:
    """Qubit positions (1-based, ascending) carrying a non-identity letter."""
    support = []
    for i in range(n, 0, -1):
        if code % 4:
            support.append(i)
        code //= 4
    return tuple(reversed(support))


def validate_subset(subset: tuple[int, ...], n: int) -> tuple[int, ...]:
    """Check that a qubit subset is strictly increasing and within 1..n."""
    subset = tuple(int(q) for q in subset)
    if any(not 1 <= q <= n for q in subset):
        raise ValueError(f"subset {subset} has qubits outside 1..{n}")
    if any(a >= b for a, b in zip(subset, subset[1:])):
        raise ValueError(f"subset {subset} is not strictly increasing")
    return subset


def all_subsets(n: int) -> list[tuple[int, ...]]:
    """Non-empty subsets of {1..n}, ordered by (size, lexicographic)."""
    out: list[tuple[int, ...]] = []
    for size in range(1, n + 1):
        out.extend(combinations(range(1, n + 1), size))
    return out


def codes_with_support(subset: tuple[int, ...], n: int) -> np.ndarray:
    """Encoded words whose non-identity letters sit exactly on ``subset``.

    There are 3^|subset| such words ({X,Y,Z} on each subset qubit, I
    elsewhere), returned in ascending encoding order.
    """
    subset = validate_subset(subset, n)
    place = [4 ** (n - q) for q in subset]
    codes = [
        sum(d * p for d, p in zip(digits, place))
        for digits in product((1, 2, 3), repeat=len(subset))
    ]
    return np.array(sorted(codes), dtype=np.int64)


def support_table(n: int) -> dict[tuple[int, ...], np.ndarray]:
    """Map every non-empty subset of {1..n} to its exactly-supported codes."""
    return {q: codes_with_support(q, n) for q in all_subsets(n)}


def pauli_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-code bit masks (x, z) over qubit bits, qubit 1 = most significant.

    The word with code p acts on computational-basis indices as the bit-flip
    mask x (X and Y letters) and the phase mask z (Z and Y letters); these
    drive channel application without building 2^n x 2^n operators.
    """
    codes = np.arange(4**n, dtype=np.int64)
    x = np.zeros(4**n, dtype=np.int64)
    z = np.zeros(4**n, dtype=np.int64)
    for i in range(n):
        digit = (codes // 4 ** (n - 1 - i)) % 4
        bit = 1 << (n - 1 - i)
        x |= np.where((digit == 1) | (digit == 2), bit, 0)
        z |= np.where((digit == 2) | (digit == 3), bit, 0)
    return x, z

"""Qubit-relabeling symmetry groups and channel symmetrisation.

Groups act on word positions: a permutation g moves the letter at position i
to position g(i).  Positions are 1-based with qubit 1 leftmost.  The loop
topology fixes the generators: reflection sigma(i) = n+1-i, rotation
pi(i) = i-2 (mod n), i.e. a shift by two sites around the closed loop so that
two-qubit gate positions are preserved.  The dihedral kind relaxes the
even-shift constraint to the full loop symmetry (all n shifts plus all n
reflections); it is the group under which measurement calibration states are
classified.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations as _all_permutations

import numpy as np

from .channel import PauliChannel
from .pauli import LETTERS

GROUP_KINDS = (
    "trivial",
    "reflection",
    "rotation",
    "reflection_rotation",
    "dihedral",
    "permutation",
)

PERMUTATION_GROUP_MAX_N = 8
BURNSIDE_MAX_N = {2: 16, 4: 10}
ENUMERATION_MAX_WORDS = 4**10


@dataclass(frozen=True)
class QubitPermutation:
    """Bijection on qubit positions 1..n; image[i-1] is where position i goes."""

    image: tuple[int, ...]

    def __post_init__(self):
        n = len(self.image)
        if sorted(self.image) != list(range(1, n + 1)):
            raise ValueError(f"{self.image} is not a permutation of 1..{n}")

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    def compose(self, other: "QubitPermutation") -> "QubitPermutation":
        """Permutation applying ``other`` first, then ``self``."""
        return QubitPermutation(tuple(self(other(i)) for i in range(1, self.n + 1)))

    def inverse(self) -> "QubitPermutation":
        inv = [0] * self.n
        for i in range(1, self.n + 1):
            inv[self(i) - 1] = i
        return QubitPermutation(tuple(inv))

    def cycle_count(self) -> int:
        seen = [False] * self.n
        cycles = 0
        for start in range(1, self.n + 1):
            if not seen[start - 1]:
                cycles += 1
                j = start
                while not seen[j - 1]:
                    seen[j - 1] = True
                    j = self(j)
        return cycles


def identity_permutation(n: int) -> QubitPermutation:
    return QubitPermutation(tuple(range(1, n + 1)))


def reflection_permutation(n: int) -> QubitPermutation:
    return QubitPermutation(tuple(n + 1 - i for i in range(1, n + 1)))


def shift_permutation(n: int, shift: int) -> QubitPermutation:
    """Move each position down by ``shift`` sites around the loop."""
    return QubitPermutation(tuple((i - 1 - shift) % n + 1 for i in range(1, n + 1)))


@dataclass(frozen=True)
class SymmetryGroup:
    kind: str
    n: int
    elements: tuple[QubitPermutation, ...]

    @property
    def order(self) -> int:
        return len(self.elements)


def make_group(kind: str, n: int) -> SymmetryGroup:
    """Build a symmetry group of the given kind on n qubits.

    Kinds: trivial {e}; reflection {e, sigma}; rotation {pi^k, k < n/2}
    (even n, shift-by-2 generator); reflection_rotation = rotation plus its
    sigma-reflected coset (order n); dihedral = every shift and every
    reflected shift (order 2n); permutation = all n! relabelings (n <= 8).
    """
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    sigma = reflection_permutation(n)
    if kind == "trivial":
        elements = [identity_permutation(n)]
    elif kind == "reflection":
        elements = [identity_permutation(n), sigma]
    elif kind in ("rotation", "reflection_rotation"):
        if n % 2:
            raise ValueError(f"{kind} group needs even n (loop of pairs), got {n}")
        rotations = [shift_permutation(n, 2 * k) for k in range(n // 2)]
        elements = list(rotations)
        if kind == "reflection_rotation":
            elements += [r.compose(sigma) for r in rotations]
    elif kind == "dihedral":
        shifts = [shift_permutation(n, s) for s in range(n)]
        elements = shifts + [s.compose(sigma) for s in shifts]
    elif kind == "permutation":
        if n > PERMUTATION_GROUP_MAX_N:
            raise ValueError(
                f"permutation group capped at n={PERMUTATION_GROUP_MAX_N}, got {n}"
            )
        elements = [QubitPermutation(p) for p in _all_permutations(range(1, n + 1))]
    else:
        raise ValueError(f"unknown group kind {kind!r}; expected one of {GROUP_KINDS}")
    # drop duplicates at degenerate sizes (e.g. sigma = e for n=1)
    unique = list(dict.fromkeys(elements))
    return SymmetryGroup(kind, n, tuple(unique))


@lru_cache(maxsize=256)
def _word_table(image: tuple[int, ...], alphabet: int, n: int) -> np.ndarray:
    """table[code] = code of the permuted word, for all alphabet^n words."""
    codes = np.arange(alphabet**n, dtype=np.int64)
    table = np.zeros_like(codes)
    for i in range(1, n + 1):
        digit = (codes // alphabet ** (n - i)) % alphabet
        table += digit * alphabet ** (n - image[i - 1])
    return table


def word_table(perm: QubitPermutation, alphabet: int) -> np.ndarray:
    out = _word_table(perm.image, alphabet, perm.n)
    out.flags.writeable = False
    return out


def act_on_pauli(perm: QubitPermutation, word: str) -> str:
    """Apply a position permutation to a Pauli word given as a string."""
    if len(word) != perm.n:
        raise ValueError(f"word length {len(word)} != permutation size {perm.n}")
    out = [""] * perm.n
    for i, letter in enumerate(word, start=1):
        out[perm(i) - 1] = letter
    return "".join(out)


def permute_channel(channel: PauliChannel, perm: QubitPermutation) -> PauliChannel:
    """Channel with coefficient of word P moved to the word g(P)."""
    if perm.n != channel.n:
        raise ValueError("permutation size does not match channel")
    table = word_table(perm, 4)
    out = np.empty_like(channel.coeffs)
    out[table] = channel.coeffs
    return PauliChannel(channel.n, out)


def symmetrize_channel(channel: PauliChannel, group: SymmetryGroup) -> PauliChannel:
    """Equal-weight average of the channel over its group images.

    coeffs'[P] = (1/|S|) sum_s coeffs[s(P)]; summing over a group makes the
    s and s^-1 conventions identical.  The result is invariant under every
    element and symmetrising twice is idempotent.
    """
    if group.n != channel.n:
        raise ValueError("group size does not match channel")
    acc = np.zeros_like(channel.coeffs)
    for g in group.elements:
        acc += channel.coeffs[word_table(g, 4)]
    return PauliChannel(channel.n, acc / group.order)


def burnside_orbit_count(group: SymmetryGroup, alphabet: int) -> int:
    """Exact orbit count of alphabet^n words: mean of alphabet^cycles(g)."""
    if alphabet not in BURNSIDE_MAX_N:
        raise ValueError(f"alphabet size {alphabet} unsupported (need 2 or 4)")
    if group.n > BURNSIDE_MAX_N[alphabet]:
        raise ValueError(
            f"n={group.n} exceeds the alphabet-{alphabet} "
            f"guard n<={BURNSIDE_MAX_N[alphabet]}"
        )
    total = sum(alphabet ** g.cycle_count() for g in group.elements)
    if total % group.order:
        raise AssertionError("Burnside sum not divisible by group order")
    return total // group.order


def enumerate_orbits(group: SymmetryGroup, alphabet: int) -> list[tuple[int, int]]:
    """Explicit orbits as (smallest member code, orbit size), ascending."""
    size = alphabet**group.n
    if size > ENUMERATION_MAX_WORDS:
        raise ValueError(f"{size} words exceed the enumeration guard")
    tables = [word_table(g, alphabet) for g in group.elements]
    seen = np.zeros(size, dtype=bool)
    orbits = []
    for code in range(size):
        if seen[code]:
            continue
        members = {int(t[code]) for t in tables}
        frontier = set(members)
        while frontier:
            nxt = {int(t[m]) for t in tables for m in frontier} - members
            members |= nxt
            frontier = nxt
        for m in members:
            seen[m] = True
        orbits.append((code, len(members)))
    return orbits


def orbit_representatives(
    group: SymmetryGroup, alphabet: int
) -> list[tuple[str, int]]:
    """Lexicographically-smallest word of each orbit, with orbit sizes."""
    symbols = "01" if alphabet == 2 else LETTERS
    reps = []
    for code, size in enumerate_orbits(group, alphabet):
        word = ""
        c = code
        for _ in range(group.n):
            word = symbols[c % alphabet] + word
            c //= alphabet
        reps.append((word, size))
    return reps


# --- closed-form coefficient counts -----------------------------------------

FORMULA_KINDS = (
    "ref",
    "rot",
    "refrot",
    "perm",
    "r1",
    "r2",
    "r2_ref",
    "r2_rot",
    "r2_refrot",
    "r2_perm",
)


@dataclass(frozen=True)
class CountFormula:
    """Closed-form coefficient count, kept as an exact rational."""

    kind: str
    n: int
    value: Fraction
    includes_identity: bool

    @property
    def integral(self) -> bool:
        return self.value.denominator == 1


def _require(kind: str, n: int, ok: bool, constraint: str):
    if not ok:
        raise ValueError(f"formula {kind!r} needs {constraint}, got n={n}")


def closed_form_count(kind: str, n: int) -> CountFormula:
    """Evaluate a symmetrised/randomised coefficient-count formula exactly.

    Formulas counting orbit classes of full Pauli words (ref, rot, refrot,
    perm) or of supports under support randomisation (r2_*) include the
    identity class; the plain randomisation counts (r1, r2) exclude it.
    Values are exact rationals: a non-integral value signals a formula
    breaking down outside its derivation's assumptions and is reported, not
    rounded.
    """
    if kind == "ref":
        _require(kind, n, n >= 2 and n % 2 == 0, "even n >= 2")
        value = Fraction(2 ** (2 * n - 1) + 2 ** (n - 1))
    elif kind == "rot":
        _require(kind, n, n >= 2 and n % 2 == 0, "even n >= 2")
        value = Fraction(2 ** (2 * n + 1) - 32, n) + 16
    elif kind == "refrot":
        _require(kind, n, n >= 8 and n % 4 == 0, "n = 4k with k >= 2")
        value = Fraction(2 ** (2 * n) + 2**n + 10 * n - 20, n)
    elif kind == "perm":
        _require(kind, n, n >= 1, "n >= 1")
        value = Fraction((n + 1) * (n + 2) * (n + 3), 6)
    elif kind == "r1":
        _require(kind, n, n >= 1, "n >= 1")
        value = Fraction(1)
    elif kind == "r2":
        _require(kind, n, n >= 1, "n >= 1")
        value = Fraction(2**n - 1)
    elif kind == "r2_ref":
        _require(kind, n, n >= 2 and n % 2 == 0, "even n >= 2")
        value = Fraction(2**n + 2 ** (n // 2), 2)
    elif kind == "r2_rot":
        _require(kind, n, n >= 2 and n % 2 == 0, "even n >= 2")
        value = Fraction(2 ** (n + 1) + 4 * n - 8, n)
    elif kind == "r2_refrot":
        _require(kind, n, n >= 8 and n % 4 == 0, "n = 4k with k >= 2")
        value = Fraction(2**n + 2 ** (n // 2) + 4 * n - 8, n)
    elif kind == "r2_perm":
        _require(kind, n, n >= 1, "n >= 1")
        value = Fraction(n + 1)
    else:
        raise ValueError(f"unknown formula kind {kind!r}; expected {FORMULA_KINDS}")
    includes_identity = kind not in ("r1", "r2")
    return CountFormula(kind, n, value, includes_identity)


_ORACLE_GROUP = {
    "ref": ("reflection", 4),
    "rot": ("rotation", 4),
    "refrot": ("reflection_rotation", 4),
    "perm": ("permutation", 4),
    "r2_ref": ("reflection", 2),
    "r2_rot": ("rotation", 2),
    "r2_refrot": ("reflection_rotation", 2),
    "r2_perm": ("permutation", 2),
}


def oracle_count(kind: str, n: int) -> int:
    """Independent orbit-count oracle matching each formula's convention.

    Group-symmetrisation formulas compare against Burnside counts of full
    words (alphabet 4) or supports (alphabet 2), identity class included.
    r1 converges to a single non-identity class by construction; r2 to one
    class per non-empty support (2^n - 1).
    """
    if kind == "r1":
        return 1
    if kind == "r2":
        return burnside_orbit_count(make_group("trivial", n), 2) - 1
    if kind not in _ORACLE_GROUP:
        raise ValueError(f"unknown formula kind {kind!r}; expected {FORMULA_KINDS}")
    group_kind, alphabet = _ORACLE_GROUP[kind]
    return burnside_orbit_count(make_group(group_kind, n), alphabet)


def verify_count(kind: str, n: int) -> dict:
    """Closed form vs oracle for one (kind, n); match is exact equality."""
    formula = closed_form_count(kind, n)
    oracle = oracle_count(kind, n)
    return {
        "kind": kind,
        "n": n,
        "closed_form": str(formula.value),
        "integral": formula.integral,
        "includes_identity": formula.includes_identity,
        "oracle": oracle,
        "match": formula.integral and formula.value == oracle,
    }

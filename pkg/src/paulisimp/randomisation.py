"""Random channel models and their convergence machinery.

Two model families produce the channels whose equal-weight average
concentrates:

* r1: every non-identity coefficient drawn independently from a common
  distribution with mean eta; the average converges to the uniform channel
  (one distinct non-identity value, a global depolarizing channel).
* r2: coefficients drawn per qubit support; all 3^|q| words supported exactly
  on subset q share a mean eta_q, so the average converges to one distinct
  value per non-empty support (2^n - 1 of them).

Distributions: uniform on [eta - spread, eta + spread] or a symmetric
triangular on the same interval (both mean eta).  A channel whose draws leave
[0, 1] or whose identity coefficient would be negative is resampled as a
whole, keeping the coefficient means exactly eta; a model whose mean is
itself infeasible is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import PauliChannel
from .pauli import all_subsets, support_table

DISTRIBUTIONS = ("uniform", "triangular")
MAX_RESAMPLE_ATTEMPTS = 1000


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _draw(rng: np.random.Generator, distribution: str, lo, hi, size) -> np.ndarray:
    if distribution == "uniform":
        return rng.uniform(lo, hi, size=size)
    mid = (np.asarray(lo) + np.asarray(hi)) / 2.0
    return rng.triangular(lo, mid, hi, size=size)


@dataclass(frozen=True)
class R1Model:
    """Independent identical draws for all 4^n - 1 non-identity coefficients."""

    n: int
    eta: float
    spread: float = 0.0
    distribution: str = "uniform"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta={self.eta} outside [0, 1]")
        if self.spread < 0:
            raise ValueError(f"spread={self.spread} negative")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")


@dataclass(frozen=True)
class R2Model:
    """Per-support draws: words supported exactly on q share mean eta_q."""

    n: int
    eta_by_subset: dict = field(default_factory=dict)
    spread: float = 0.0
    distribution: str = "uniform"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        expected = set(all_subsets(self.n))
        got = {tuple(q) for q in self.eta_by_subset}
        if got != expected:
            raise ValueError(
                f"eta_by_subset must cover every non-empty subset of 1..{self.n}"
            )
        for q, eta in self.eta_by_subset.items():
            if not 0.0 <= eta <= 0.5:
                raise ValueError(f"eta for subset {q} is {eta}, outside [0, 1/2]")
        if self.spread < 0:
            raise ValueError(f"spread={self.spread} negative")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")


def default_eta_map(n: int, base: float = 0.01, decay: float = 0.1) -> dict:
    """eta_q = base * decay^(|q|-1): weight-ranked support strengths."""
    return {q: base * decay ** (len(q) - 1) for q in all_subsets(n)}


def _mean_vector(model) -> np.ndarray:
    """Per-coefficient means for the non-identity block, in encoding order."""
    if isinstance(model, R1Model):
        return np.full(4**model.n - 1, model.eta)
    means = np.empty(4**model.n)
    for q, codes in support_table(model.n).items():
        means[codes] = model.eta_by_subset[tuple(q)]
    return means[1:]


def model_feasible(model) -> bool:
    """True when the mean channel itself has a non-negative identity weight."""
    return float(_mean_vector(model).sum()) <= 1.0


def _rejection_free(model) -> bool:
    means = _mean_vector(model)
    lo = means.min() - model.spread
    hi = means.max() + model.spread
    return lo >= 0.0 and hi <= 1.0 and float(means.sum()) + (
        4**model.n - 1
    ) * model.spread <= 1.0


def sample_channel(model, seed) -> PauliChannel:
    """Draw one channel from an R1Model or R2Model.

    ``seed`` may be an integer or a Generator; passing one Generator across
    calls continues the same stream, which is what averaging does.

    Raises:
        ValueError: infeasible model (mean identity weight negative, or no
            valid draw within 1000 whole-channel attempts).
    """
    rng = _as_rng(seed)
    if not model_feasible(model):
        raise ValueError(
            "infeasible model: mean non-identity mass exceeds 1, the identity "
            "coefficient would be negative on average"
        )
    means = _mean_vector(model)
    lo = means - model.spread
    hi = means + model.spread
    for _ in range(MAX_RESAMPLE_ATTEMPTS):
        draws = _draw(rng, model.distribution, lo, hi, means.size)
        if draws.min() < 0.0 or draws.max() > 1.0:
            continue
        identity = 1.0 - float(draws.sum())
        if identity < 0.0:
            continue
        coeffs = np.empty(4**model.n)
        coeffs[0] = identity
        coeffs[1:] = draws
        return PauliChannel(model.n, coeffs)
    raise ValueError(
        f"infeasible model: no valid channel in {MAX_RESAMPLE_ATTEMPTS} attempts"
    )


def average_sampled_channels(model, count: int, seed) -> PauliChannel:
    """Equal-weight average of ``count`` fresh draws from one stream.

    When no draw can be rejected (interval inside [0, 1] and worst-case mass
    at most 1) the average is accumulated chunk-wise from the identical RNG
    stream instead of materialising channels; a unit test pins the exact
    stream equivalence.
    """
    if count < 1:
        raise ValueError(f"need at least one channel, got count={count}")
    rng = _as_rng(seed)
    if model.distribution == "uniform" and _rejection_free(model):
        means = _mean_vector(model)
        lo = means - model.spread
        width = (means + model.spread) - lo
        k = means.size
        acc = np.zeros(k)
        left = count
        chunk = max(1, min(2**18, 50_000_000 // max(k, 1)))
        buffer = np.empty((min(chunk, count), k))
        ones = np.ones(buffer.shape[0])
        while left:
            m = min(chunk, left)
            block = buffer[:m]
            # Filling in place and scaling by hand consumes the stream and
            # rounds exactly like rng.uniform(lo, hi, size=(m, k)), so the
            # result is bit-identical to per-channel sampling, just without
            # the per-draw allocations.
            rng.random(out=block)
            np.multiply(block, width, out=block)
            np.add(block, lo, out=block)
            acc += ones[:m] @ block
            left -= m
        draws = acc / count
        coeffs = np.empty(4**model.n)
        coeffs[0] = 1.0 - float(draws.sum())
        coeffs[1:] = draws
        return PauliChannel(model.n, coeffs)
    acc = np.zeros(4**model.n)
    for _ in range(count):
        acc += sample_channel(model, rng).coeffs
    return PauliChannel(model.n, acc / count)


def max_mean_deviation(channel: PauliChannel, model) -> float:
    """Largest |coefficient - model mean| over the non-identity block."""
    return float(np.abs(channel.nonidentity - _mean_vector(model)).max())


def hoeffding_n(epsilon: float, delta: float) -> int:
    """Samples guaranteeing P(|mean - eta| > epsilon) <= delta per coefficient.

    N = ceil(ln(2/delta) / (2 epsilon^2)) for draws supported in [0, 1].
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon={epsilon} must be positive")
    if not 0 < delta < 1:
        raise ValueError(f"delta={delta} must lie in (0, 1)")
    raw = math.log(2.0 / delta) / (2.0 * epsilon**2)
    # A few-ulp guard keeps exact-integer bounds (for example epsilon = 1/sqrt(2),
    # delta = 2/e giving exactly 1) from rounding up through float error.
    return math.ceil(raw * (1.0 - 4e-16))


def hoeffding_epsilon(count: int, delta: float) -> float:
    """Deviation bound achieved by ``count`` samples at confidence 1 - delta."""
    if count < 1:
        raise ValueError(f"count={count} must be positive")
    if not 0 < delta < 1:
        raise ValueError(f"delta={delta} must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * count))


def fit_depolarizing(channel: PauliChannel) -> tuple[float, float]:
    """Best uniform-coefficient fit: (lam, max-abs residual).

    eta_hat is the mean non-identity coefficient and lam = 4^n eta_hat, the
    action-convention parameter of the channel whose every non-identity
    coefficient equals eta_hat.  The residual is the largest absolute
    deviation of a non-identity coefficient from eta_hat, so it bounds the
    envelope around the fit rather than an aggregate distance.
    """
    eta_hat = float(channel.nonidentity.mean())
    lam = (4**channel.n) * eta_hat
    residual = float(np.abs(channel.nonidentity - eta_hat).max())
    return lam, residual


def fit_subset_depolarizing(channel: PauliChannel) -> tuple[dict, float]:
    """Per-support uniform fit: ({subset: eta_hat_q}, residual).

    eta_hat_q is the mean over the 3^|q| coefficients supported exactly on q;
    the residual is the largest absolute deviation of a non-identity
    coefficient from its support's fitted value (envelope half-width).
    """
    table = support_table(channel.n)
    etas = {}
    rebuilt = np.empty(4**channel.n)
    for q, codes in table.items():
        eta_q = float(channel.coeffs[codes].mean())
        etas[tuple(q)] = eta_q
        rebuilt[codes] = eta_q
    residual = float(np.abs(channel.coeffs[1:] - rebuilt[1:]).max())
    return etas, residual


def distinct_value_count(values, tol: float) -> int:
    """Single-link cluster count of a value list at tolerance ``tol``."""
    arr = np.sort(np.asarray(list(values), dtype=float))
    if arr.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(arr) > tol))

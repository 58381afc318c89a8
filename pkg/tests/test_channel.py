import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paulisimp.channel import (
    PauliChannel,
    average_channels,
    bit_flip_channel,
    channel_complexity,
    channel_distance,
    channel_from_json,
    channel_to_json,
    compose_channels,
    depolarizing_channel,
    depolarizing_parameter,
    identity_channel,
    make_channel,
    uniform_channel,
)
from paulisimp.pauli import encode_pauli


def random_channel(n, rng):
    c = rng.random(4**n)
    return make_channel(n, c / c.sum())


small_n = st.integers(1, 3)


def test_make_channel_validates():
    with pytest.raises(ValueError, match="shape"):
        make_channel(2, np.ones(15) / 15)
    bad = np.full(16, 1 / 16.0)
    bad[3] = -1e-3
    bad[0] += 1e-3
    with pytest.raises(ValueError, match="index 3"):
        make_channel(2, bad)
    off = np.full(16, (1 + 5e-8) / 16)
    with pytest.raises(ValueError, match="sum"):
        make_channel(2, off)


def test_make_channel_renormalises_tiny_drift():
    drift = np.full(4, (1 + 5e-10) / 4)
    ch = make_channel(1, drift)
    assert ch.coeffs.sum() == 1.0


def test_coefficients_read_only():
    ch = identity_channel(2)
    with pytest.raises(ValueError):
        ch.coeffs[0] = 0.5


def test_identity_channel():
    ch = identity_channel(2)
    assert ch.identity_coefficient == 1.0
    assert ch.nonidentity.sum() == 0.0


def test_uniform_channel_bounds():
    ch = uniform_channel(2, 0.01)
    assert np.allclose(ch.nonidentity, 0.01)
    assert ch.identity_coefficient == pytest.approx(1 - 15 * 0.01)
    with pytest.raises(ValueError):
        uniform_channel(2, 1 / 14.0)
    with pytest.raises(ValueError):
        uniform_channel(2, -0.001)


def test_depolarizing_parameter_relation():
    ch = depolarizing_channel(2, 0.32)
    assert np.allclose(ch.nonidentity, 0.32 / 16)
    assert depolarizing_parameter(0.32 / 16, 2) == pytest.approx(0.32)
    with pytest.raises(ValueError):
        depolarizing_channel(2, 1.2)


def test_bit_flip_channel_kron_structure():
    p = [0.1, 0.25]
    ch = bit_flip_channel(2, p)
    assert ch.coeffs[encode_pauli("II")] == pytest.approx(0.9 * 0.75)
    assert ch.coeffs[encode_pauli("XI")] == pytest.approx(0.1 * 0.75)
    assert ch.coeffs[encode_pauli("IX")] == pytest.approx(0.9 * 0.25)
    assert ch.coeffs[encode_pauli("XX")] == pytest.approx(0.1 * 0.25)
    assert ch.coeffs[encode_pauli("ZI")] == 0.0
    with pytest.raises(ValueError):
        bit_flip_channel(2, [0.1])
    with pytest.raises(ValueError):
        bit_flip_channel(1, [1.5])


def test_average_channels():
    a = uniform_channel(1, 0.1)
    b = identity_channel(1)
    avg = average_channels([a, b])
    assert np.allclose(avg.nonidentity, 0.05)
    with pytest.raises(ValueError):
        average_channels([])
    with pytest.raises(ValueError):
        average_channels([a, identity_channel(2)])


def test_compose_with_identity():
    rng = np.random.default_rng(0)
    ch = random_channel(2, rng)
    for composed in (
        compose_channels(ch, identity_channel(2)),
        compose_channels(identity_channel(2), ch),
    ):
        assert np.allclose(composed.coeffs, ch.coeffs, atol=1e-15)


def test_compose_single_qubit_by_hand():
    """X-then-Z mixing: products pick up the group structure X.Z ~ Y."""
    x_only = make_channel(1, [0.7, 0.3, 0.0, 0.0])
    z_only = make_channel(1, [0.6, 0.0, 0.0, 0.4])
    composed = compose_channels(z_only, x_only)
    expected = np.array([0.42, 0.18, 0.12, 0.28])
    assert np.allclose(composed.coeffs, expected)


@settings(max_examples=25, deadline=None)
@given(small_n, st.integers(0, 2**32 - 1))
def test_compose_preserves_distribution(n, seed):
    rng = np.random.default_rng(seed)
    a, b = random_channel(n, rng), random_channel(n, rng)
    composed = compose_channels(a, b)
    assert composed.coeffs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(composed.coeffs >= -1e-15)


@settings(max_examples=15, deadline=None)
@given(small_n, st.integers(0, 2**32 - 1))
def test_compose_associative(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_channel(n, rng) for _ in range(3))
    left = compose_channels(compose_channels(a, b), c)
    right = compose_channels(a, compose_channels(b, c))
    assert np.allclose(left.coeffs, right.coeffs, atol=1e-14)


def test_complexity_counts_distinct_values():
    ch = make_channel(1, [0.85, 0.05, 0.05, 0.05])
    assert channel_complexity(ch) == 1
    assert channel_complexity(ch, include_identity=True) == 2
    ch2 = make_channel(1, [0.85, 0.05 + 1e-12, 0.05, 0.05 - 1e-12])
    assert channel_complexity(ch2) == 1
    ch3 = make_channel(1, [0.85, 0.07, 0.05, 0.03])
    assert channel_complexity(ch3) == 3


def test_complexity_monotone_in_tolerance():
    rng = np.random.default_rng(3)
    ch = random_channel(2, rng)
    tols = [1e-12, 1e-6, 1e-3, 1e-1]
    counts = [channel_complexity(ch, tol=t) for t in tols]
    assert counts == sorted(counts, reverse=True)


def test_distance_metric_properties():
    rng = np.random.default_rng(1)
    a, b, c = (random_channel(2, rng) for _ in range(3))
    assert channel_distance(a, a) == 0.0
    assert channel_distance(a, b) == pytest.approx(channel_distance(b, a))
    assert channel_distance(a, c) <= channel_distance(a, b) + channel_distance(b, c) + 1e-15
    assert 0.0 <= channel_distance(a, b) <= 1.0
    with pytest.raises(ValueError):
        channel_distance(a, random_channel(1, rng))


def test_json_round_trip_bit_faithful():
    rng = np.random.default_rng(5)
    ch = random_channel(2, rng)
    back = channel_from_json(channel_to_json(ch))
    assert back.n == ch.n
    assert np.array_equal(back.coeffs, ch.coeffs)
    payload = json.loads(channel_to_json(ch))
    assert set(payload) == {"n", "coeffs"}
    assert len(payload["coeffs"]) == 16


def test_channel_equality():
    a = uniform_channel(2, 0.01)
    b = uniform_channel(2, 0.01)
    c = uniform_channel(2, 0.02)
    assert a == b
    assert a != c

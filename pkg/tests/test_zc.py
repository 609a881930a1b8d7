import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from raptor_mma.zc import PreambleBank, cyclic_correlate, derive_preamble, generate_root, is_prime

PRIMES = [13, 31, 61, 139, 839]


def naive_correlate(a, b):
    n = len(a)
    return np.array([abs(sum(a[k] * np.conj(b[(k + s) % n]) for k in range(n))) for s in range(n)])


def test_first_sample_is_one():
    assert generate_root(1, 5).samples[0] == 1 + 0j


def test_unit_modulus_non_prime():
    with pytest.warns(UserWarning):
        z = generate_root(1, 100)
    assert np.max(np.abs(np.abs(z.samples) - 1)) < 1e-12


def test_closed_form_scalar_oracle():
    z = generate_root(3, 7)
    assert abs(z.samples[2] - cmath.exp(-1j * math.pi * 3 * 6 / 7)) < 1e-12
    for n in range(7):
        assert abs(z.samples[n] - cmath.exp(-1j * math.pi * 3 * n * (n + 1) / 7)) < 1e-12


def test_root_range_and_strict_mode():
    with pytest.raises(ValueError):
        generate_root(0, 13)
    with pytest.raises(ValueError):
        generate_root(13, 13)
    with pytest.raises(ValueError):
        generate_root(1, 100, strict=True)


def test_derive_preamble_shifts():
    root = generate_root(1, 31)
    assert np.array_equal(derive_preamble(root, 0, 5, 1).samples, root.samples)
    assert np.array_equal(derive_preamble(root, 1, 5, 1).samples, np.roll(root.samples, -5))
    p = derive_preamble(root, 2, 5, 3, tau_samples=2)
    naive = [root.samples[(n + 14) % 31] for n in range(31)]
    assert p.total_shift == 14 and np.array_equal(p.samples, naive)
    with pytest.raises(ValueError):
        derive_preamble(root, 6, 5, 2)


def test_autocorrelation_of_root_one_length_100():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        z = generate_root(1, 100).samples
    c = cyclic_correlate(z, z)
    assert abs(c[0] - 100) < 1e-9
    # non-prime length: sidelobes are small but not zero
    assert c[1:].max() < 10


def test_correlate_zero_and_mismatch():
    assert np.all(cyclic_correlate(np.zeros(13, complex), generate_root(1, 13).samples) == 0)
    with pytest.raises(ValueError):
        cyclic_correlate(np.zeros(3), np.zeros(4))


def test_fft_correlation_matches_brute_force():
    root = generate_root(2, 13)
    a = derive_preamble(root, 1, 3, 2).samples
    b = derive_preamble(root, 3, 3, 1).samples
    fast, slow = cyclic_correlate(a, b), naive_correlate(a, b)
    assert np.allclose(fast, slow, atol=1e-9)
    # peak where b, shifted by the difference of total shifts, lines up with a
    assert int(np.argmax(fast)) == (4 - 9) % 13


@given(st.sampled_from(PRIMES), st.data())
def test_prime_sidelobes_and_unit_modulus(n, data):
    r = data.draw(st.integers(1, n - 1))
    z = generate_root(r, n).samples
    assert np.max(np.abs(np.abs(z) - 1)) < 1e-12
    c = cyclic_correlate(z, z)
    assert abs(c[0] - n) < 1e-8 and c[1:].max() < n / 10


@given(st.data())
def test_peak_at_total_shift(data):
    n = 61
    n_cs = data.draw(st.integers(1, 10))
    i = data.draw(st.integers(0, (n - 1) // n_cs))
    tau = data.draw(st.integers(0, 3))
    j = data.draw(st.integers(1, 5))
    if i * n_cs + (j - 1) * tau >= n:
        return
    root = generate_root(7, n)
    p = derive_preamble(root, i, n_cs, j, tau)
    assert int(np.argmax(cyclic_correlate(root.samples, p.samples))) == (-p.total_shift) % n
    assert int(np.argmax(cyclic_correlate(p.samples, root.samples))) == p.total_shift


def test_is_prime():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]


def test_bank_layout_and_root_choice():
    bank = PreambleBank(20, 20, 100)
    assert bank.templates.shape == (20, 20, 100) and bank.per_root == 5 and len(bank.roots) == 4
    # every template is a cyclic shift of its root
    p = bank[7, 3]
    root = bank.roots[7 // 5].samples
    assert np.array_equal(p, np.roll(root, -((7 % 5) * 20 + 3)))
    prime = PreambleBank(64, 20, 839)
    assert [r.root_index for r in prime.roots] == [1, 2]

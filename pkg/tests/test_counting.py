import pytest

from sepalabel.counting import CountValue, is_probable_prime, prime_bits_for, random_prime
from sepalabel.rng import SplitMix64


def test_splitmix_deterministic():
    a = SplitMix64(42)
    b = SplitMix64(42)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]
    c = SplitMix64(43)
    assert a.next_u64() != c.next_u64()


def test_splitmix_randint_range():
    rng = SplitMix64(9)
    values = [rng.randint(1, 6) for _ in range(500)]
    assert set(values) == {1, 2, 3, 4, 5, 6}


def test_count_value_arithmetic():
    a = CountValue(3)
    b = CountValue(4)
    assert int(a + b) == 7
    assert int(a * b) == 12
    assert not a.is_zero
    assert CountValue(0).is_zero


def test_count_value_mod():
    a = CountValue(6, 7)
    b = CountValue(5, 7)
    assert int(a + b) == 4
    assert int(a * b) == 2


def test_count_value_mixed_mode_rejected():
    with pytest.raises(ValueError):
        CountValue(1, 7) + CountValue(1)
    with pytest.raises(ValueError):
        CountValue(1, 7) * CountValue(1, 11)


def test_count_value_validation():
    with pytest.raises(ValueError):
        CountValue(-1)
    with pytest.raises(ValueError):
        CountValue(9, 7)


def test_miller_rabin_small():
    primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31}
    for n in range(2, 32):
        assert is_probable_prime(n) == (n in primes)


def test_miller_rabin_carmichael():
    for n in (561, 1105, 1729, 2465, 2821, 6601):
        assert not is_probable_prime(n)


def test_random_prime_bits_and_determinism():
    p1 = random_prime(61, seed=5)
    p2 = random_prime(61, seed=5)
    p3 = random_prime(61, seed=6)
    assert p1 == p2
    assert p1 != p3
    assert p1.bit_length() == 61
    assert is_probable_prime(p1)


def test_prime_bits_for():
    assert prime_bits_for(2, 1024) == 80  # 4 * 2 * 10
    assert prime_bits_for(0, 1024) == 40  # k clamped to 1

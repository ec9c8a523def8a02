"""
Paillier cryptosystem over the integers.

This module provides key generation, semantically secure encryption,
decryption and the two homomorphic operations (ciphertext addition and
scaling by a signed integer). The generator is fixed to g = N + 1, so
g^m mod N^2 collapses to 1 + m*N.

All probabilistic operations take a randomness source implementing the
``random.Random`` interface (``getrandbits``/``randrange``). Passing
``None`` selects ``secrets.SystemRandom``; tests pass seeded
``random.Random`` instances.
"""

import logging
import random
import secrets
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import gmpy2

from ..exceptions import CryptoError, KeyGenerationError

logger = logging.getLogger(__name__)

DEFAULT_KEY_BITS = 256
MIN_KEY_BITS = 16

# Prime candidates tried per factor before giving up
MAX_PRIME_ATTEMPTS = 10_000


def default_rng(rng: Optional[random.Random] = None) -> random.Random:
    """Return ``rng`` or a cryptographic source when it is None."""
    return rng if rng is not None else secrets.SystemRandom()


@dataclass(frozen=True)
class PublicKey:
    """
    Paillier public key.

    Attributes:
        n (int): Modulus N = p*q
        g (int): Generator, always N + 1
        bits (int): Bit length of N
    """
    n: int
    g: int
    bits: int

    def __post_init__(self):
        if self.g != self.n + 1:
            raise CryptoError("generator must equal N + 1")
        if self.bits != self.n.bit_length():
            raise CryptoError(f"bits={self.bits} does not match bit length of N ({self.n.bit_length()})")

    @cached_property
    def nsquare(self) -> int:
        return self.n * self.n

    @property
    def max_int(self) -> int:
        """Largest plaintext treated as nonnegative, (N - 1) // 2."""
        return (self.n - 1) // 2


@dataclass(frozen=True)
class PrivateKey:
    """
    Paillier private key.

    Attributes:
        lambda_key (int): Carmichael value lcm(p-1, q-1)
        mu (int): Inverse of L(g^lambda mod N^2) modulo N
    """
    lambda_key: int
    mu: int = field(repr=False)

    def __repr__(self) -> str:
        return "PrivateKey(<hidden>)"


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    private: PrivateKey


@dataclass(frozen=True)
class Ciphertext:
    """An element of Z_{N^2}^* encrypting a plaintext in Z_N."""
    value: int


def _l_function(u: int, n: int) -> int:
    return (u - 1) // n


def keypair_from_primes(p: int, q: int) -> KeyPair:
    """
    Build a key pair from two known primes.

    Args:
        p (int): First prime
        q (int): Second prime, distinct from p

    Returns:
        KeyPair: Keys with g = N + 1

    Raises:
        CryptoError: If p == q or gcd(pq, (p-1)(q-1)) != 1
    """
    if p == q:
        raise CryptoError("p and q must be distinct")
    n = p * q
    if gmpy2.gcd(n, (p - 1) * (q - 1)) != 1:
        raise CryptoError("gcd(pq, (p-1)(q-1)) must be 1")
    g = n + 1
    lambda_key = int(gmpy2.lcm(p - 1, q - 1))
    nsquare = n * n
    u = int(gmpy2.powmod(g, lambda_key, nsquare))
    mu = int(gmpy2.invert(_l_function(u, n), n))
    public = PublicKey(n=n, g=g, bits=n.bit_length())
    return KeyPair(public=public, private=PrivateKey(lambda_key=lambda_key, mu=mu))


def _random_prime(half_bits: int, rng: random.Random) -> int:
    # Top two bits set so the product of two such primes has exactly 2*half_bits bits
    top = 3 << (half_bits - 2)
    for _ in range(MAX_PRIME_ATTEMPTS):
        candidate = rng.getrandbits(half_bits) | top | 1
        prime = int(gmpy2.next_prime(candidate))
        if prime.bit_length() == half_bits:
            return prime
    raise KeyGenerationError(f"no {half_bits}-bit prime found after {MAX_PRIME_ATTEMPTS} candidates")


def keygen(bits: int = DEFAULT_KEY_BITS, rng: Optional[random.Random] = None) -> KeyPair:
    """
    Generate a Paillier key pair.

    Args:
        bits (int): Bit length of the modulus N; must be even and >= 16
        rng (random.Random, optional): Randomness source

    Returns:
        KeyPair: Fresh public and private keys

    Raises:
        ValueError: If bits is odd or below the minimum
        KeyGenerationError: If the prime search is exhausted
    """
    if bits < MIN_KEY_BITS:
        raise ValueError(f"key size must be at least {MIN_KEY_BITS} bits, got {bits}")
    if bits % 2:
        raise ValueError(f"key size must be even so p and q share a bit length, got {bits}")
    rng = default_rng(rng)
    half = bits // 2
    try:
        for _ in range(MAX_PRIME_ATTEMPTS):
            p = _random_prime(half, rng)
            q = _random_prime(half, rng)
            if p == q or gmpy2.gcd(p * q, (p - 1) * (q - 1)) != 1:
                continue
            keys = keypair_from_primes(p, q)
            logger.debug("Generated %d-bit Paillier key", keys.public.bits)
            return keys
    except (OSError, NotImplementedError) as exc:
        raise KeyGenerationError(f"randomness source failed: {exc}") from exc
    raise KeyGenerationError(f"could not find a valid {bits}-bit prime pair")


def random_unit(pk: PublicKey, rng: Optional[random.Random] = None) -> int:
    """Draw r uniformly from the units of Z_N."""
    rng = default_rng(rng)
    while True:
        r = rng.randrange(1, pk.n)
        if gmpy2.gcd(r, pk.n) == 1:
            return r


def encrypt(pk: PublicKey, m: int, r: Optional[int] = None,
            rng: Optional[random.Random] = None) -> Ciphertext:
    """
    Encrypt a plaintext in Z_N.

    Args:
        pk (PublicKey): Public key
        m (int): Plaintext, 0 <= m < N
        r (int, optional): Blinding factor coprime to N; drawn when omitted
        rng (random.Random, optional): Source used when r is omitted

    Returns:
        Ciphertext: (1 + m*N) * r^N mod N^2

    Raises:
        CryptoError: If m is out of range or r is not coprime to N
    """
    if not 0 <= m < pk.n:
        raise CryptoError(f"plaintext out of range [0, N): {m}")
    if r is None:
        r = random_unit(pk, rng)
    elif not 0 < r < pk.n or gmpy2.gcd(r, pk.n) != 1:
        raise CryptoError("blinding factor must be a unit of Z_N")
    nsquare = pk.nsquare
    gm = (1 + m * pk.n) % nsquare
    return Ciphertext(int(gm * gmpy2.powmod(r, pk.n, nsquare) % nsquare))


def decrypt(sk: PrivateKey, pk: PublicKey, c: Ciphertext) -> int:
    """
    Decrypt a ciphertext to its plaintext in Z_N.

    Raises:
        CryptoError: If c is not a unit modulo N^2
    """
    nsquare = pk.nsquare
    if not 0 < c.value < nsquare or gmpy2.gcd(c.value, nsquare) != 1:
        raise CryptoError("ciphertext is not a unit modulo N^2")
    u = int(gmpy2.powmod(c.value, sk.lambda_key, nsquare))
    return _l_function(u, pk.n) * sk.mu % pk.n


def hom_add(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """E[x] * E[y] = E[x + y mod N]."""
    return Ciphertext(a.value * b.value % pk.nsquare)


def hom_scale(pk: PublicKey, c: Ciphertext, k: int) -> Ciphertext:
    """
    Raise a ciphertext to a signed integer exponent: E[x]^k = E[k*x mod N].

    Negative exponents use the modular inverse of c raised to |k|.

    Raises:
        CryptoError: If k < 0 and c is not invertible modulo N^2
    """
    nsquare = pk.nsquare
    if k >= 0:
        return Ciphertext(int(gmpy2.powmod(c.value, k, nsquare)))
    try:
        inverse = gmpy2.invert(c.value, nsquare)
    except ZeroDivisionError as exc:
        raise CryptoError("ciphertext is not invertible modulo N^2") from exc
    return Ciphertext(int(gmpy2.powmod(inverse, -k, nsquare)))


def hom_negate(pk: PublicKey, c: Ciphertext) -> Ciphertext:
    return hom_scale(pk, c, -1)


def rerandomize(pk: PublicKey, c: Ciphertext, rng: Optional[random.Random] = None) -> Ciphertext:
    """Multiply by a fresh encryption of zero, keeping the plaintext."""
    r = random_unit(pk, rng)
    return Ciphertext(c.value * int(gmpy2.powmod(r, pk.n, pk.nsquare)) % pk.nsquare)


def decrypt_signed(keys: KeyPair, c: Ciphertext) -> int:
    """Decrypt and map the upper half of Z_N to negative integers."""
    m = decrypt(keys.private, keys.public, c)
    return m - keys.public.n if m > keys.public.max_int else m


def encrypt_signed(pk: PublicKey, value: int, rng: Optional[random.Random] = None) -> Ciphertext:
    """Encrypt a signed integer with |value| <= (N - 1) // 2."""
    if abs(value) > pk.max_int:
        raise CryptoError(f"signed plaintext magnitude exceeds (N-1)/2: {value}")
    return encrypt(pk, value % pk.n, rng=rng)


def hom_add_plain(pk: PublicKey, c: Ciphertext, m: int) -> Ciphertext:
    """E[x] * g^m = E[x + m mod N] without fresh randomness."""
    return Ciphertext(c.value * ((1 + (m % pk.n) * pk.n) % pk.nsquare) % pk.nsquare)


def encrypt_many(pk: PublicKey, plaintexts: Sequence[int], rng: Optional[random.Random] = None,
                 workers: int = 1) -> List[Ciphertext]:
    """
    Encrypt a batch of plaintexts, optionally on a thread pool.

    Blinding factors are drawn from ``rng`` in order before any work is
    dispatched, so the output does not depend on ``workers``.
    """
    rng = default_rng(rng)
    units = [random_unit(pk, rng) for _ in plaintexts]
    if workers > 1 and len(plaintexts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda pair: encrypt(pk, pair[0], pair[1]), zip(plaintexts, units)))
    return [encrypt(pk, m, r) for m, r in zip(plaintexts, units)]

"""
Fixed-point codec for signed reals under Paillier.

A real x at scale s is represented by floor(C^s * |x|), with negatives
mapped to their additive inverse N - floor(C^s * |x|). Plaintexts above
(N - 1) / 2 decode as negative. Every encrypted value carries its scale
exponent so products of scaled values are never decoded at the wrong
scale.
"""

import logging
import math
import random
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal, localcontext
from typing import Optional

from ..exceptions import DomainOverflowError, ScaleMismatchError
from . import paillier
from .paillier import Ciphertext, KeyPair, PublicKey

logger = logging.getLogger(__name__)

DEFAULT_SCALE = 10 ** 6


@dataclass(frozen=True)
class CodecParams:
    """
    Scale constant and modulus shared by both parties.

    Attributes:
        C (int): Scale constant, >= 1
        n (int): Paillier modulus N
    """
    C: int
    n: int

    def __post_init__(self):
        if self.C < 1:
            raise ValueError(f"scale constant must be >= 1, got {self.C}")
        if self.domain_bound < 1:
            raise DomainOverflowError(f"modulus too small for C={self.C}: domain bound is 0")

    @classmethod
    def for_key(cls, pk: PublicKey, C: int = DEFAULT_SCALE) -> "CodecParams":
        return cls(C=C, n=pk.n)

    @property
    def max_int(self) -> int:
        return (self.n - 1) // 2

    @property
    def domain_bound(self) -> int:
        """B = floor((N - 1) / (2C)), the largest magnitude encodable at scale 1."""
        return (self.n - 1) // (2 * self.C)

    def factor(self, scale: int) -> int:
        return self.C ** scale

    def fits(self, magnitude: int) -> bool:
        return 0 <= magnitude <= self.max_int

    def scaled_magnitude(self, x: float, scale: int = 1) -> int:
        """floor(C^scale * |x|), computed exactly on the decimal value of x."""
        if not math.isfinite(x):
            raise DomainOverflowError(f"cannot encode non-finite value {x}")
        with localcontext() as ctx:
            ctx.prec = max(60, scale * len(str(self.C)) + 40)
            exact = abs(Decimal(repr(float(x)))) * self.factor(scale)
            return int(exact.to_integral_value(rounding=ROUND_DOWN))

    def encode(self, x: float, scale: int = 1) -> int:
        if scale == 1 and abs(x) > self.domain_bound:
            raise DomainOverflowError(f"|{x}| exceeds domain bound {self.domain_bound}")
        magnitude = self.scaled_magnitude(x, scale)
        if not self.fits(magnitude):
            raise DomainOverflowError(f"{x} at scale {scale} exceeds the plaintext domain")
        if x < 0 and magnitude:
            return self.n - magnitude
        return magnitude

    def decode(self, m: int, scale: int = 1) -> float:
        if m > self.max_int:
            return (m - self.n) / self.factor(scale)
        return m / self.factor(scale)

    def signed(self, m: int) -> int:
        """Signed integer view of a plaintext under the midpoint convention."""
        return m - self.n if m > self.max_int else m


@dataclass(frozen=True)
class ScaledCiphertext:
    """An encrypted value whose plaintext represents real * C^scale."""
    cipher: Ciphertext
    scale: int


def encode(params: CodecParams, x: float) -> int:
    """
    Encode a signed real at scale 1.

    Args:
        params (CodecParams): Codec parameters
        x (float): Value with |x| <= B

    Returns:
        int: floor(C*x) for x >= 0, N - floor(C*|x|) for x < 0

    Raises:
        DomainOverflowError: If |x| exceeds the domain bound
    """
    return params.encode(x, 1)


def decode(params: CodecParams, m: int, scale: int = 1) -> float:
    """Decode a plaintext recorded at ``scale``; the upper half of Z_N is negative."""
    return params.decode(m, scale)


def check_key_capacity(bits: int, C: int, max_magnitude: float) -> None:
    """
    Reject key sizes too small for the scale constant.

    Requires 2 * log2(C^2 * max_magnitude) < bits so a product of two
    scale-1 values of the given magnitude stays inside D.

    Raises:
        DomainOverflowError: If the key is too small
    """
    needed = 2 * math.log2(C * C * max(max_magnitude, 1.0))
    if needed >= bits:
        raise DomainOverflowError(
            f"{bits}-bit key cannot hold C={C} with magnitudes up to {max_magnitude}: need > {needed:.1f} bits")


def encrypt_real(pk: PublicKey, params: CodecParams, x: float, scale: int = 1,
                 rng: Optional[random.Random] = None) -> ScaledCiphertext:
    return ScaledCiphertext(paillier.encrypt(pk, params.encode(x, scale), rng=rng), scale)


def decrypt_real(keys: KeyPair, params: CodecParams, value: ScaledCiphertext) -> float:
    m = paillier.decrypt(keys.private, keys.public, value.cipher)
    return params.decode(m, value.scale)


def scaled_add(pk: PublicKey, a: ScaledCiphertext, b: ScaledCiphertext) -> ScaledCiphertext:
    """
    Homomorphic addition of two values at the same scale.

    Raises:
        ScaleMismatchError: If the scales differ; values are never rescaled silently
    """
    if a.scale != b.scale:
        raise ScaleMismatchError(f"cannot add scale {a.scale} to scale {b.scale}")
    return ScaledCiphertext(paillier.hom_add(pk, a.cipher, b.cipher), a.scale)


def mul_int(pk: PublicKey, a: ScaledCiphertext, k: int) -> ScaledCiphertext:
    """Multiply by a signed integer; the scale exponent is unchanged."""
    return ScaledCiphertext(paillier.hom_scale(pk, a.cipher, k), a.scale)


def scaled_mul_plain(pk: PublicKey, params: CodecParams, a: ScaledCiphertext,
                     y: float) -> ScaledCiphertext:
    """
    Multiply by a plaintext real encoded at scale 1; the result has scale + 1.

    Raises:
        DomainOverflowError: If |y| exceeds B or C^(scale+1) no longer fits in D
    """
    return mul_scaled(pk, params, a, y, 1)


def rebase(pk: PublicKey, params: CodecParams, a: ScaledCiphertext, scale: int) -> ScaledCiphertext:
    """
    Raise a value to a higher scale by an exact integer multiplication by C^delta.

    Raises:
        ScaleMismatchError: If the target scale is lower than the current one
    """
    if scale < a.scale:
        raise ScaleMismatchError(f"cannot lower scale {a.scale} to {scale} without decryption")
    if scale == a.scale:
        return a
    if not params.fits(params.factor(scale)):
        raise DomainOverflowError(f"scale {scale} exceeds the plaintext domain")
    return ScaledCiphertext(paillier.hom_scale(pk, a.cipher, params.factor(scale - a.scale)), scale)


def mul_scaled(pk: PublicKey, params: CodecParams, a: ScaledCiphertext, y: float,
               y_scale: int) -> ScaledCiphertext:
    """
    Multiply by a plaintext real encoded at ``y_scale``; scales add.

    Raises:
        DomainOverflowError: If the encoded y or C^(scale + y_scale) leaves D
    """
    scale = a.scale + y_scale
    if not params.fits(params.factor(scale)):
        raise DomainOverflowError(f"scale {scale} exceeds the plaintext domain")
    exponent = params.signed(params.encode(y, y_scale))
    return ScaledCiphertext(paillier.hom_scale(pk, a.cipher, exponent), scale)


def add_plain(pk: PublicKey, params: CodecParams, a: ScaledCiphertext, x: float) -> ScaledCiphertext:
    """Add a plaintext real encoded at the ciphertext's own scale."""
    return ScaledCiphertext(paillier.hom_add_plain(pk, a.cipher, params.encode(x, a.scale)), a.scale)

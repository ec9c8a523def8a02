"""
Cryptographic building blocks.

Contains the Paillier cryptosystem, the fixed-point codec used to carry
signed reals through it, and byte encodings for integers and keys.
"""

from .paillier import (
    Ciphertext,
    KeyPair,
    PrivateKey,
    PublicKey,
    decrypt,
    encrypt,
    encrypt_many,
    hom_add,
    hom_add_plain,
    hom_scale,
    keygen,
    keypair_from_primes,
    rerandomize,
)
from .fixedpoint import (
    CodecParams,
    ScaledCiphertext,
    check_key_capacity,
    decode,
    encode,
    mul_int,
    rebase,
    add_plain,
    mul_scaled,
    scaled_add,
    scaled_mul_plain,
)
from .serialization import load_keypair, save_keypair

__all__ = [
    'Ciphertext',
    'KeyPair',
    'PrivateKey',
    'PublicKey',
    'decrypt',
    'encrypt',
    'encrypt_many',
    'hom_add',
    'hom_add_plain',
    'hom_scale',
    'keygen',
    'keypair_from_primes',
    'rerandomize',
    'CodecParams',
    'ScaledCiphertext',
    'check_key_capacity',
    'decode',
    'encode',
    'mul_int',
    'rebase',
    'add_plain',
    'mul_scaled',
    'scaled_add',
    'scaled_mul_plain',
    'load_keypair',
    'save_keypair',
]

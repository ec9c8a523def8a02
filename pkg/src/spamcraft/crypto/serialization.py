"""
Byte encodings for big integers and Paillier keys.

A big integer is one sign byte (0x00 nonnegative, 0x01 negative), a
4-byte big-endian magnitude length and the big-endian magnitude. Keys are
the ordered concatenation of their fields in that encoding.
"""

import struct
from pathlib import Path
from typing import List, Tuple, Union

from ..exceptions import CryptoError
from .paillier import KeyPair, PrivateKey, PublicKey

_LENGTH = struct.Struct(">I")


def encode_int(value: int) -> bytes:
    """Encode a signed integer as sign byte + length + magnitude."""
    sign = b"\x01" if value < 0 else b"\x00"
    magnitude = abs(value)
    body = magnitude.to_bytes((magnitude.bit_length() + 7) // 8, "big")
    return sign + _LENGTH.pack(len(body)) + body


def decode_int(data: bytes, offset: int = 0) -> Tuple[int, int]:
    """
    Decode one integer starting at ``offset``.

    Returns:
        Tuple[int, int]: (value, offset just past the integer)
    """
    if len(data) < offset + 5:
        raise CryptoError("truncated integer header")
    sign = data[offset]
    if sign not in (0, 1):
        raise CryptoError(f"invalid sign byte {sign:#x}")
    (length,) = _LENGTH.unpack_from(data, offset + 1)
    start = offset + 5
    end = start + length
    if len(data) < end:
        raise CryptoError("truncated integer magnitude")
    magnitude = int.from_bytes(data[start:end], "big")
    return (-magnitude if sign else magnitude), end


def encode_ints(values: List[int]) -> bytes:
    return b"".join(encode_int(v) for v in values)


def decode_ints(data: bytes, count: int) -> List[int]:
    values = []
    offset = 0
    for _ in range(count):
        value, offset = decode_int(data, offset)
        values.append(value)
    if offset != len(data):
        raise CryptoError("trailing bytes after encoded integers")
    return values


def public_key_to_bytes(pk: PublicKey) -> bytes:
    return encode_ints([pk.n, pk.g])


def public_key_from_bytes(data: bytes) -> PublicKey:
    n, g = decode_ints(data, 2)
    return PublicKey(n=n, g=g, bits=n.bit_length())


def keypair_to_bytes(keys: KeyPair) -> bytes:
    pk, sk = keys.public, keys.private
    return encode_ints([pk.n, pk.g, sk.lambda_key, sk.mu])


def keypair_from_bytes(data: bytes) -> KeyPair:
    n, g, lambda_key, mu = decode_ints(data, 4)
    return KeyPair(public=PublicKey(n=n, g=g, bits=n.bit_length()),
                   private=PrivateKey(lambda_key=lambda_key, mu=mu))


def save_keypair(keys: KeyPair, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(keypair_to_bytes(keys))
    return path


def load_keypair(path: Union[str, Path]) -> KeyPair:
    return keypair_from_bytes(Path(path).read_bytes())

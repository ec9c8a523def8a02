"""
Protocol messages and their wire framing.

frame  = length[4B, big-endian] | body
body   = version[1B] | session_id[8B] | type[1B] | count[4B] | field*
field  = length[4B] | bytes

Ciphertext-carrying messages put a (step, scale) header in the first field
and one big-integer encoding per ciphertext in the rest. Key/value
messages carry ``key=value`` ASCII fields with decimal numbers.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

from ..crypto.paillier import Ciphertext
from ..crypto.serialization import decode_int, encode_int
from ..exceptions import CryptoError, FrameError

PROTOCOL_VERSION = 1
SESSION_ID_BYTES = 8
DEFAULT_MAX_FRAME_BYTES = 64 * 1024 * 1024

# version[1B] | session_id[8B] | type[1B] | field count[4B]
_BODY_HEADER = struct.Struct('>B8sBI')
_LENGTH = struct.Struct('>I')
# step[1B] | scale[2B]
_CIPHER_HEADER = struct.Struct('>BH')


class MessageType(IntEnum):
    HANDSHAKE = 1
    ENC_VECTOR = 2
    ENC_SCALARS = 3
    PLAIN_SCALARS = 4
    COMPARE_BITS = 5
    CONTROL = 6
    ABORT = 7


CIPHER_TYPES = (MessageType.ENC_VECTOR, MessageType.ENC_SCALARS, MessageType.COMPARE_BITS)


@dataclass(frozen=True)
class ProtocolMessage:
    """
    One protocol message.

    Attributes:
        type (MessageType): Type tag
        fields (Tuple[bytes, ...]): Payload fields
        session_id (bytes): 8-byte session identifier
        version (int): Protocol version byte
    """
    type: MessageType
    fields: Tuple[bytes, ...] = ()
    session_id: bytes = bytes(SESSION_ID_BYTES)
    version: int = PROTOCOL_VERSION

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_BYTES:
            raise FrameError(f"session id must be {SESSION_ID_BYTES} bytes")

    # construction helpers

    @classmethod
    def ciphertexts(cls, type: MessageType, step: int, scale: int, values: Sequence[Ciphertext],
                    session_id: bytes = bytes(SESSION_ID_BYTES)) -> "ProtocolMessage":
        fields = (_CIPHER_HEADER.pack(step, scale),) + tuple(encode_int(c.value) for c in values)
        return cls(type, fields, session_id)

    @classmethod
    def key_values(cls, type: MessageType, values: Mapping[str, object],
                   session_id: bytes = bytes(SESSION_ID_BYTES)) -> "ProtocolMessage":
        fields = tuple(f"{key}={value}".encode('ascii') for key, value in values.items())
        return cls(type, fields, session_id)

    @classmethod
    def control(cls, word: str, session_id: bytes = bytes(SESSION_ID_BYTES), **extra) -> "ProtocolMessage":
        return cls.key_values(MessageType.CONTROL, {'control': word, **extra}, session_id)

    @classmethod
    def abort(cls, reason: str, session_id: bytes = bytes(SESSION_ID_BYTES)) -> "ProtocolMessage":
        return cls(MessageType.ABORT, (reason.encode('utf-8', errors='replace'),), session_id)

    # payload views

    def cipher_payload(self) -> Tuple[int, int, List[Ciphertext]]:
        """
        Split a ciphertext message into (step, scale, ciphertexts).

        Raises:
            FrameError: If the message does not carry ciphertexts
        """
        if self.type not in CIPHER_TYPES or not self.fields:
            raise FrameError(f"{self.type.name} message carries no ciphertexts")
        if len(self.fields[0]) != _CIPHER_HEADER.size:
            raise FrameError("malformed ciphertext header field")
        step, scale = _CIPHER_HEADER.unpack(self.fields[0])
        values = []
        for raw in self.fields[1:]:
            try:
                value, end = decode_int(raw)
            except CryptoError as exc:
                raise FrameError(f"malformed ciphertext field: {exc}") from exc
            if end != len(raw) or value <= 0:
                raise FrameError("ciphertext field must hold one positive integer")
            values.append(Ciphertext(value))
        return step, scale, values

    def as_mapping(self) -> Dict[str, str]:
        result = {}
        for raw in self.fields:
            try:
                key, _, value = raw.decode('ascii').partition('=')
            except UnicodeDecodeError as exc:
                raise FrameError("key/value field is not ASCII") from exc
            result[key] = value
        return result

    @property
    def element_count(self) -> int:
        """Ciphertext elements carried; 0 for non-ciphertext messages."""
        return max(len(self.fields) - 1, 0) if self.type in CIPHER_TYPES else 0

    @property
    def reason(self) -> str:
        return self.fields[0].decode('utf-8', errors='replace') if self.fields else ''

    # wire format

    def to_bytes(self) -> bytes:
        parts = [_BODY_HEADER.pack(self.version, self.session_id, int(self.type), len(self.fields))]
        for data in self.fields:
            parts.append(_LENGTH.pack(len(data)))
            parts.append(data)
        return b''.join(parts)

    @classmethod
    def from_bytes(cls, body: bytes) -> "ProtocolMessage":
        """
        Parse a frame body.

        Raises:
            FrameError: On truncation, trailing bytes or an unknown type tag
        """
        if len(body) < _BODY_HEADER.size:
            raise FrameError("frame body shorter than its header")
        version, session_id, tag, count = _BODY_HEADER.unpack_from(body)
        try:
            msg_type = MessageType(tag)
        except ValueError as exc:
            raise FrameError(f"unknown message type tag {tag}") from exc
        offset = _BODY_HEADER.size
        fields = []
        for _ in range(count):
            if len(body) < offset + _LENGTH.size:
                raise FrameError("truncated field length")
            (length,) = _LENGTH.unpack_from(body, offset)
            offset += _LENGTH.size
            if len(body) < offset + length:
                raise FrameError("truncated field")
            fields.append(bytes(body[offset:offset + length]))
            offset += length
        if offset != len(body):
            raise FrameError(f"{len(body) - offset} trailing bytes after fields")
        return cls(msg_type, tuple(fields), session_id, version)


def encode_frame(message: ProtocolMessage, max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES) -> bytes:
    body = message.to_bytes()
    if len(body) > max_frame_bytes:
        raise FrameError(f"frame of {len(body)} bytes exceeds the {max_frame_bytes}-byte limit")
    return _LENGTH.pack(len(body)) + body


def decode_frame(frame: bytes, max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES) -> ProtocolMessage:
    if len(frame) < _LENGTH.size:
        raise FrameError("frame shorter than its length prefix")
    (length,) = _LENGTH.unpack_from(frame)
    if length > max_frame_bytes:
        raise FrameError(f"frame of {length} bytes exceeds the {max_frame_bytes}-byte limit")
    if len(frame) != _LENGTH.size + length:
        raise FrameError("frame length prefix does not match its body")
    return ProtocolMessage.from_bytes(frame[_LENGTH.size:])


def read_frame(read_exact: Callable[[int], bytes],
               max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES) -> ProtocolMessage:
    """
    Read one frame through a callable returning exactly n bytes.

    Raises:
        FrameError: If the announced length exceeds the limit
    """
    (length,) = _LENGTH.unpack(read_exact(_LENGTH.size))
    if length > max_frame_bytes:
        raise FrameError(f"frame of {length} bytes exceeds the {max_frame_bytes}-byte limit")
    return ProtocolMessage.from_bytes(read_exact(length))

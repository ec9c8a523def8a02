"""
Wire messages and channels.

Session orchestration lives in ``spamcraft.transport.session`` and the
handshake in ``spamcraft.transport.handshake``; both build on the
protocol package, which itself imports the message types defined here.
"""

from .messages import (
    DEFAULT_MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
    MessageType,
    ProtocolMessage,
    decode_frame,
    encode_frame,
    read_frame,
)
from .channels import BaseChannel, InProcChannel, SocketChannel

__all__ = [
    'DEFAULT_MAX_FRAME_BYTES',
    'PROTOCOL_VERSION',
    'MessageType',
    'ProtocolMessage',
    'decode_frame',
    'encode_frame',
    'read_frame',
    'BaseChannel',
    'InProcChannel',
    'SocketChannel',
]

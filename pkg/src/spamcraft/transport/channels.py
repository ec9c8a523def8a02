"""
Duplex message channels.

Both channel kinds carry the same framed bytes, so a session runs
unchanged in one process (InProcChannel) or across a TCP connection
(SocketChannel).
"""

import logging
import queue
import socket
from abc import ABC, abstractmethod
from typing import Optional, Tuple

from ..exceptions import FrameError
from .messages import DEFAULT_MAX_FRAME_BYTES, ProtocolMessage, decode_frame, encode_frame, read_frame

logger = logging.getLogger(__name__)


class BaseChannel(ABC):
    """
    One endpoint of a bidirectional, ordered message stream.

    Counts frames and bytes in each direction.
    """

    def __init__(self, name: str, max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES):
        self.name = name
        self.max_frame_bytes = max_frame_bytes
        self.frames_sent = 0
        self.frames_received = 0
        self.bytes_sent = 0
        self.bytes_received = 0
        self.logger = logging.getLogger(__name__)

    def send(self, message: ProtocolMessage) -> None:
        frame = encode_frame(message, self.max_frame_bytes)
        self._send_frame(frame)
        self.frames_sent += 1
        self.bytes_sent += len(frame)
        self.logger.debug("%s -> %s (%d bytes)", self.name, message.type.name, len(frame))

    def recv(self) -> ProtocolMessage:
        message, size = self._recv_message()
        self.frames_received += 1
        self.bytes_received += size
        self.logger.debug("%s <- %s (%d bytes)", self.name, message.type.name, size)
        return message

    @abstractmethod
    def _send_frame(self, frame: bytes) -> None:
        pass

    @abstractmethod
    def _recv_message(self) -> Tuple[ProtocolMessage, int]:
        pass

    @abstractmethod
    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


class InProcChannel(BaseChannel):
    """Queue-backed endpoint; frames still go through encode and decode."""

    _CLOSED = object()

    def __init__(self, name: str, inbox: queue.Queue, outbox: queue.Queue,
                 max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES, timeout: Optional[float] = None):
        super().__init__(name, max_frame_bytes)
        self.inbox = inbox
        self.outbox = outbox
        self.timeout = timeout

    @classmethod
    def pair(cls, names: Tuple[str, str] = ('bob', 'alice'),
             max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES,
             timeout: Optional[float] = None) -> Tuple["InProcChannel", "InProcChannel"]:
        """Two connected endpoints."""
        a_to_b: queue.Queue = queue.Queue()
        b_to_a: queue.Queue = queue.Queue()
        return (cls(names[0], b_to_a, a_to_b, max_frame_bytes, timeout),
                cls(names[1], a_to_b, b_to_a, max_frame_bytes, timeout))

    def _send_frame(self, frame: bytes) -> None:
        self.outbox.put(frame)

    def _recv_message(self) -> Tuple[ProtocolMessage, int]:
        try:
            frame = self.inbox.get(timeout=self.timeout)
        except queue.Empty as exc:
            raise TimeoutError(f"{self.name}: no message within {self.timeout}s") from exc
        if frame is self._CLOSED:
            raise ConnectionError(f"{self.name}: peer closed the channel")
        return decode_frame(frame, self.max_frame_bytes), len(frame)

    def close(self) -> None:
        self.outbox.put(self._CLOSED)


class SocketChannel(BaseChannel):
    """Endpoint over a connected stream socket."""

    def __init__(self, sock: socket.socket, name: str = 'socket',
                 max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES, timeout: Optional[float] = None):
        super().__init__(name, max_frame_bytes)
        self.sock = sock
        self.sock.settimeout(timeout)
        self._last_size = 0

    @classmethod
    def connect(cls, host: str, port: int, name: str = 'client',
                max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES,
                timeout: Optional[float] = None) -> "SocketChannel":
        sock = socket.create_connection((host, port), timeout=timeout)
        logger.info("Connected to %s:%d", host, port)
        return cls(sock, name, max_frame_bytes, timeout)

    def _send_frame(self, frame: bytes) -> None:
        self.sock.sendall(frame)

    def _read_exact(self, size: int) -> bytes:
        chunks = []
        remaining = size
        while remaining:
            chunk = self.sock.recv(min(remaining, 1 << 20))
            if not chunk:
                if remaining == size and not chunks:
                    raise ConnectionError(f"{self.name}: connection closed by peer")
                raise FrameError(f"{self.name}: connection closed mid-frame")
            chunks.append(chunk)
            remaining -= len(chunk)
        self._last_size += size
        return b''.join(chunks)

    def _recv_message(self) -> Tuple[ProtocolMessage, int]:
        self._last_size = 0
        message = read_frame(self._read_exact, self.max_frame_bytes)
        return message, self._last_size

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

"""
Tests for wire frames, channels, the handshake and the model registry.
"""

import random
import socket
import string
import struct

import numpy as np
import pytest

from spamcraft.crypto.fixedpoint import CodecParams
from spamcraft.crypto.paillier import Ciphertext
from spamcraft.exceptions import FrameError, HandshakeError
from spamcraft.learning import Model
from spamcraft.protocol import plan_scales
from spamcraft.transport import (
    PROTOCOL_VERSION,
    InProcChannel,
    MessageType,
    ProtocolMessage,
    SocketChannel,
    decode_frame,
    encode_frame,
)
from spamcraft.transport.handshake import SessionTerms, client_confirm, client_hello, server_accept
from spamcraft.transport.messages import CIPHER_TYPES
from spamcraft.transport.session import ModelRegistry

SID = b"\x01\x02\x03\x04\x05\x06\x07\x08"


class TestFrames:
    """Length-prefixed frame layout."""

    def test_layout(self):
        msg = ProtocolMessage(MessageType.CONTROL, (b"control=done",), SID)
        frame = encode_frame(msg)
        body_len = 1 + 8 + 1 + 4 + 4 + len(b"control=done")
        assert frame[:4] == struct.pack('>I', body_len)
        assert frame[4] == PROTOCOL_VERSION
        assert frame[5:13] == SID
        assert frame[13] == MessageType.CONTROL
        assert decode_frame(frame) == msg

    def test_ciphertext_payload(self):
        ciphers = [Ciphertext(7), Ciphertext(2 ** 300 + 1)]
        msg = ProtocolMessage.ciphertexts(MessageType.ENC_SCALARS, 5, 4, ciphers, SID)
        step, scale, values = decode_frame(encode_frame(msg)).cipher_payload()
        assert (step, scale) == (5, 4)
        assert values == ciphers
        assert msg.element_count == 2

    def test_empty_vector(self):
        msg = ProtocolMessage.ciphertexts(MessageType.ENC_VECTOR, 1, 1, [], SID)
        assert decode_frame(encode_frame(msg)).cipher_payload() == (1, 1, [])

    def test_control_values(self):
        msg = ProtocolMessage.control('continue', SID, change=0.5)
        assert msg.as_mapping() == {'control': 'continue', 'change': '0.5'}
        assert msg.element_count == 0

    def test_frame_limit(self):
        msg = ProtocolMessage(MessageType.PLAIN_SCALARS, (b"x" * 100,), SID)
        with pytest.raises(FrameError):
            encode_frame(msg, max_frame_bytes=50)
        frame = encode_frame(msg)
        with pytest.raises(FrameError):
            decode_frame(frame, max_frame_bytes=50)

    @pytest.mark.parametrize("mutate", [
        lambda f: f[:-1],
        lambda f: f + b"\x00",
        lambda f: f[:13] + b"\x63" + f[14:],
        lambda f: f[:3],
    ])
    def test_malformed_frames(self, mutate):
        frame = encode_frame(ProtocolMessage.control('done', SID))
        with pytest.raises(FrameError):
            decode_frame(mutate(frame))

    def test_bad_session_id_length(self):
        with pytest.raises(FrameError):
            ProtocolMessage(MessageType.CONTROL, (), b"\x00" * 4)

    def test_no_ciphertexts_in_control(self):
        with pytest.raises(FrameError):
            ProtocolMessage.control('round', SID).cipher_payload()

    def test_non_positive_ciphertext(self):
        msg = ProtocolMessage.ciphertexts(MessageType.ENC_VECTOR, 1, 1, [Ciphertext(0)], SID)
        with pytest.raises(FrameError):
            msg.cipher_payload()

    def test_abort_reason(self):
        assert ProtocolMessage.abort("key too small", SID).reason == "key too small"


def _random_message(rng: random.Random, msg_type: MessageType) -> ProtocolMessage:
    sid = rng.randbytes(8)
    if msg_type in CIPHER_TYPES:
        ciphers = [Ciphertext(rng.getrandbits(rng.randint(1, 2048)) | 1) for _ in range(rng.randint(0, 12))]
        return ProtocolMessage.ciphertexts(msg_type, rng.randint(0, 255), rng.randint(0, 65535), ciphers, sid)
    if msg_type == MessageType.ABORT:
        reason = ''.join(rng.choice(string.printable) for _ in range(rng.randint(0, 80)))
        return ProtocolMessage.abort(reason, sid)
    values = {f"k{i}": rng.choice([rng.randint(-10 ** 30, 10 ** 30), rng.random(), 'on'])
              for i in range(rng.randint(0, 8))}
    return ProtocolMessage.key_values(msg_type, values, sid)


@pytest.mark.parametrize("msg_type", list(MessageType), ids=lambda t: t.name)
def test_randomized_frames_round_trip(msg_type):
    rng = random.Random(int(msg_type))
    for _ in range(50):
        msg = _random_message(rng, msg_type)
        parsed = decode_frame(encode_frame(msg))
        assert parsed == msg
        if msg_type in CIPHER_TYPES:
            assert parsed.cipher_payload() == msg.cipher_payload()
        else:
            assert parsed.as_mapping() == msg.as_mapping()


@pytest.mark.parametrize("msg_type", list(MessageType), ids=lambda t: t.name)
def test_arbitrary_fields_round_trip(msg_type):
    rng = random.Random(100 + int(msg_type))
    for _ in range(50):
        fields = tuple(rng.randbytes(rng.randint(0, 300)) for _ in range(rng.randint(0, 10)))
        msg = ProtocolMessage(msg_type, fields, rng.randbytes(8))
        assert decode_frame(encode_frame(msg)) == msg


class TestChannels:
    """In-process and socket channels carry identical frames."""

    def test_inproc_pair(self):
        bob, alice = InProcChannel.pair()
        msg = ProtocolMessage.control('round', SID)
        alice.send(msg)
        assert bob.recv() == msg
        assert alice.frames_sent == bob.frames_received == 1
        assert alice.bytes_sent == bob.bytes_received == len(encode_frame(msg))

    def test_inproc_close(self):
        bob, alice = InProcChannel.pair()
        alice.close()
        with pytest.raises(ConnectionError):
            bob.recv()

    def test_inproc_timeout(self):
        bob, _ = InProcChannel.pair(timeout=0.01)
        with pytest.raises(TimeoutError):
            bob.recv()

    def test_socket_pair(self):
        left, right = socket.socketpair()
        with SocketChannel(left, 'left', timeout=5.0) as a, SocketChannel(right, 'right', timeout=5.0) as b:
            msg = ProtocolMessage.ciphertexts(MessageType.ENC_VECTOR, 1, 1, [Ciphertext(12345)] * 50, SID)
            a.send(msg)
            assert b.recv() == msg
            assert b.bytes_received == a.bytes_sent

    def test_socket_peer_closed(self):
        left, right = socket.socketpair()
        b = SocketChannel(right, 'right', timeout=5.0)
        left.close()
        with pytest.raises(ConnectionError):
            b.recv()
        b.close()

    def test_socket_closed_mid_frame(self):
        left, right = socket.socketpair()
        b = SocketChannel(right, 'right', timeout=5.0)
        left.sendall(encode_frame(ProtocolMessage.control('round', SID))[:-3])
        left.close()
        with pytest.raises(FrameError):
            b.recv()
        b.close()


class TestHandshake:
    """HELLO, terms and refusal."""

    def _terms(self, keys, d=20, block_size=10):
        codec = CodecParams.for_key(keys.public)
        plan = plan_scales(codec, blind_bound=32.0, block_size=block_size)
        return SessionTerms('train', keys.public, codec.C, d, block_size=block_size, eta=0.001,
                            reg_lambda=0.0, plan=plan)

    def test_accept_and_confirm(self, keys256):
        terms = self._terms(keys256)
        reply = server_accept(client_hello('train', 20, 10 ** 6, 256, 10), terms, SID)
        confirmed = client_confirm(reply, 'train', d=20, C=10 ** 6)
        assert confirmed == terms
        assert reply.session_id == SID

    def test_zero_means_no_expectation(self, keys256):
        terms = self._terms(keys256)
        reply = server_accept(client_hello('train', 0, 0, 0, 0), terms, SID)
        assert client_confirm(reply, 'train').d == 20

    @pytest.mark.parametrize("hello_args", [
        ('train', 21, 10 ** 6, 256, 10),
        ('train', 20, 1000, 256, 10),
        ('train', 20, 10 ** 6, 1024, 10),
        ('train', 20, 10 ** 6, 256, 11),
        ('eval', 20, 10 ** 6, 256, 0),
    ])
    def test_mismatch_refused(self, keys256, hello_args):
        with pytest.raises(HandshakeError):
            server_accept(client_hello(*hello_args), self._terms(keys256), SID)

    def test_client_rejects_small_key(self, keys256):
        reply = server_accept(client_hello('train', 20, 10 ** 6, 256, 10), self._terms(keys256), SID)
        with pytest.raises(HandshakeError):
            client_confirm(reply, 'train', min_bits=1024)

    def test_client_needs_session_id(self, keys256):
        reply = server_accept(client_hello('train', 20, 10 ** 6, 256, 10), self._terms(keys256),
                              bytes(8))
        with pytest.raises(HandshakeError):
            client_confirm(reply, 'train')

    def test_refusal_surfaces_reason(self):
        with pytest.raises(HandshakeError, match="dimension"):
            client_confirm(ProtocolMessage.abort("dimension mismatch", SID), 'train')

    def test_eval_terms(self, keys256):
        terms = SessionTerms('eval', keys256.public, 10 ** 6, 6, margin_bound=4_625_001, bit_width=40)
        assert SessionTerms.from_fields(terms.to_fields()) == terms

    def test_missing_field(self, keys256):
        fields = self._terms(keys256).to_fields()
        del fields['recip_scale']
        with pytest.raises(HandshakeError):
            SessionTerms.from_fields(fields)

    def test_unknown_hello_kind(self):
        with pytest.raises(ValueError):
            client_hello('audit', 1, 1, 1)


class TestModelRegistry:
    """Commits apply each round's change to the current model."""

    def test_sequential_commit_replaces(self):
        start = Model(np.zeros(3))
        registry = ModelRegistry(start)
        end = start.with_weights(np.array([1.0, 2.0, 3.0]))
        assert registry.commit(start, end) is end
        assert registry.version == 1

    def test_concurrent_commits_add_deltas(self):
        start = Model(np.zeros(2))
        registry = ModelRegistry(start)
        registry.commit(start, start.with_weights(np.array([1.0, 0.0])))
        merged = registry.commit(start, start.with_weights(np.array([0.0, 0.5])))
        assert merged.w.tolist() == [1.0, 0.5]
        assert registry.model is merged
        assert registry.version == 2

"""
Secure comparison of two private integers under the key holder's Paillier key.

The key holder owns s and the private key; the initiator owns r. Both
learn whether r > s and nothing else about the other's input:

1. The key holder sends E[s_j] for every bit of s.
2. For every position j the initiator forms
   c_j = s_j - r_j + 1 + 3 * sum_{t > j} (r_t XOR s_t),
   expanding the XOR linearly because r_t is known in the clear. It
   raises each c_j to a random unit, rerandomizes and shuffles the terms.
3. The key holder decrypts the terms. A zero appears exactly when the
   first differing bit from the top has r_j = 1 and s_j = 0, i.e. r > s.
4. The key holder returns the predicate bit to the initiator.
"""

import logging
import random
from typing import List, Optional

from ..crypto import paillier
from ..crypto.paillier import Ciphertext, KeyPair, PublicKey
from ..exceptions import ProtocolStateError
from ..transport.messages import SESSION_ID_BYTES, MessageType, ProtocolMessage
from .counters import OpCounters

logger = logging.getLogger(__name__)

STEP_BITS = 20
STEP_TERMS = 21


def to_bits(value: int, bit_width: int) -> List[int]:
    """Little-endian bit decomposition of a value in [0, 2^bit_width)."""
    return [(value >> j) & 1 for j in range(bit_width)]


def from_bits(bits: List[int]) -> int:
    return sum(bit << j for j, bit in enumerate(bits))


def _check_range(value: int, bit_width: int, name: str) -> None:
    if bit_width < 1:
        raise ValueError(f"bit width must be >= 1, got {bit_width}")
    if not 0 <= value < (1 << bit_width):
        raise ValueError(f"{name}={value} outside [0, 2^{bit_width})")


class ComparisonKeyHolder:
    """Holder of s and the private key."""

    def __init__(self, keys: KeyPair, s: int, bit_width: int, rng: Optional[random.Random] = None,
                 counters: Optional[OpCounters] = None, session_id: bytes = bytes(SESSION_ID_BYTES)):
        _check_range(s, bit_width, 's')
        self.keys = keys
        self.s = s
        self.bit_width = bit_width
        self.rng = paillier.default_rng(rng)
        self.counters = counters if counters is not None else OpCounters()
        self.session_id = session_id
        self.result: Optional[bool] = None
        self._sent_bits = False

    def encrypt_bits(self) -> ProtocolMessage:
        bits = to_bits(self.s, self.bit_width)
        ciphers = paillier.encrypt_many(self.keys.public, bits, self.rng)
        self.counters.count_encrypt(self.bit_width)
        self.counters.count_sent('keyholder->initiator', 'compare', self.bit_width)
        self._sent_bits = True
        return ProtocolMessage.ciphertexts(MessageType.COMPARE_BITS, STEP_BITS, 0, ciphers, self.session_id)

    def detect_zero(self, msg: ProtocolMessage) -> ProtocolMessage:
        """
        Decrypt the blinded terms and settle r > s.

        Returns:
            ProtocolMessage: Control message carrying the predicate for the initiator
        """
        if not self._sent_bits or self.result is not None:
            raise ProtocolStateError("comparison terms received out of order")
        if msg.type != MessageType.COMPARE_BITS:
            raise ProtocolStateError(f"expected COMPARE_BITS, got {msg.type.name}")
        step, _, terms = msg.cipher_payload()
        if step != STEP_TERMS or len(terms) != self.bit_width:
            raise ProtocolStateError(f"expected {self.bit_width} comparison terms")
        pk, sk = self.keys.public, self.keys.private
        self.result = any(paillier.decrypt(sk, pk, c) == 0 for c in terms)
        self.counters.count_decrypt(self.bit_width)
        return ProtocolMessage.control('compare-result', self.session_id, greater=int(self.result))


class ComparisonInitiator:
    """Holder of r; never sees a plaintext of the key holder."""

    def __init__(self, pk: PublicKey, r: int, bit_width: int, rng: Optional[random.Random] = None,
                 counters: Optional[OpCounters] = None):
        _check_range(r, bit_width, 'r')
        self.pk = pk
        self.r = r
        self.bit_width = bit_width
        self.rng = paillier.default_rng(rng)
        self.counters = counters if counters is not None else OpCounters()
        self.result: Optional[bool] = None
        self._sent_terms = False

    def blind_terms(self, msg: ProtocolMessage) -> ProtocolMessage:
        if self._sent_terms:
            raise ProtocolStateError("comparison bits received twice")
        if msg.type != MessageType.COMPARE_BITS:
            raise ProtocolStateError(f"expected COMPARE_BITS, got {msg.type.name}")
        step, _, enc_s = msg.cipher_payload()
        if step != STEP_BITS or len(enc_s) != self.bit_width:
            raise ProtocolStateError(f"expected {self.bit_width} encrypted bits")
        pk = self.pk
        r_bits = to_bits(self.r, self.bit_width)
        xor_sum = Ciphertext(1)
        terms: List[Ciphertext] = []
        for j in reversed(range(self.bit_width)):
            term = paillier.hom_add(pk, enc_s[j], paillier.hom_scale(pk, xor_sum, 3))
            term = paillier.hom_add_plain(pk, term, 1 - r_bits[j])
            term = paillier.hom_scale(pk, term, paillier.random_unit(pk, self.rng))
            terms.append(paillier.rerandomize(pk, term, self.rng))
            # r_j XOR s_j is s_j when r_j = 0 and 1 - s_j when r_j = 1
            xor = enc_s[j] if r_bits[j] == 0 else paillier.hom_add_plain(pk, paillier.hom_negate(pk, enc_s[j]), 1)
            xor_sum = paillier.hom_add(pk, xor_sum, xor)
        self.rng.shuffle(terms)
        self.counters.count_sent('initiator->keyholder', 'compare', self.bit_width)
        self._sent_terms = True
        return ProtocolMessage.ciphertexts(MessageType.COMPARE_BITS, STEP_TERMS, 0, terms, msg.session_id)

    def receive_result(self, msg: ProtocolMessage) -> bool:
        if not self._sent_terms:
            raise ProtocolStateError("comparison result received before the terms were sent")
        values = msg.as_mapping()
        if msg.type != MessageType.CONTROL or values.get('control') != 'compare-result':
            raise ProtocolStateError("expected the comparison result")
        self.result = values.get('greater') == '1'
        return self.result


def secure_compare(keys: KeyPair, r: int, s: int, bit_width: int,
                   rng: Optional[random.Random] = None) -> bool:
    """
    Run the comparison between two in-process parties.

    Returns:
        bool: r > s, as learned by both parties
    """
    holder = ComparisonKeyHolder(keys, s, bit_width, rng)
    initiator = ComparisonInitiator(keys.public, r, bit_width, rng)
    reply = holder.detect_zero(initiator.blind_terms(holder.encrypt_bits()))
    return initiator.receive_result(reply)

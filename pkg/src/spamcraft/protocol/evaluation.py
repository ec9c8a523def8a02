"""
Private classification.

Bob holds the model w and the key pair; Carol holds one document x'.
Carol learns sign(w^T x') and Bob learns nothing about x' beyond it.

1. Bob sends E[w] (encrypted once and reused across documents) with the
   public margin bound M and comparison width l.
2. Carol forms E[w^T x'] from the entries of E[w] selected by x' and
   returns E[w^T x' - r] for r uniform on [M, 2^l - 1 - M].
3. Bob decrypts the share and sets s = r - w^T x'. Now r - s = w^T x'
   and both r and s lie in [0, 2^l).
4. A secure comparison decides r > s, i.e. w^T x' > 0. An exact zero
   margin classifies as not spam.
"""

import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

from ..crypto import paillier
from ..crypto.fixedpoint import CodecParams, DEFAULT_SCALE
from ..crypto.paillier import Ciphertext, KeyPair, PublicKey
from ..exceptions import ProtocolStateError
from ..features.vectors import SparseBinaryVector
from ..learning.logistic import Model
from ..transport.messages import MessageType, ProtocolMessage
from .comparison import ComparisonInitiator, ComparisonKeyHolder
from .counters import OpCounters
from .training import new_session_id

logger = logging.getLogger(__name__)

DEFAULT_PADDING_BITS = 16
STEP_WEIGHTS = 1
STEP_SHARE = 3


@dataclass(frozen=True)
class EvalShares:
    """
    Natural-number shares of an encoded margin: carol_r - bob_s = w^T x'.

    Attributes:
        carol_r (int): Carol's additive mask
        bob_s (int): Bob's share
        bit_width (int): Both shares lie in [0, 2^bit_width)
    """
    carol_r: int
    bob_s: int
    bit_width: int

    def __post_init__(self):
        limit = 1 << self.bit_width
        if not (0 <= self.carol_r < limit and 0 <= self.bob_s < limit):
            raise ValueError(f"shares must lie in [0, 2^{self.bit_width})")

    @property
    def margin(self) -> int:
        return self.carol_r - self.bob_s


class EvalPhase(Enum):
    AWAITING_WEIGHTS = 'awaiting weights'
    AWAITING_SHARE = 'awaiting share'
    AWAITING_BITS = 'awaiting comparison bits'
    AWAITING_TERMS = 'awaiting comparison terms'
    AWAITING_RESULT = 'awaiting result'
    DONE = 'done'


class BobEvaluator:
    """
    Model owner's evaluation service for one model.

    E[w] is computed on first use and shared by every later session.
    """

    def __init__(self, keys: KeyPair, model: Model, C: int = DEFAULT_SCALE,
                 padding_bits: int = DEFAULT_PADDING_BITS, rng: Optional[random.Random] = None,
                 workers: int = 1):
        self.keys = keys
        self.model = model
        self.codec = CodecParams.for_key(keys.public, C)
        self.padding_bits = padding_bits
        self.rng = paillier.default_rng(rng)
        self.workers = workers
        self.counters = OpCounters()
        self._encoded = [self.codec.encode(float(value), 1) for value in model.w]
        self._enc_w: Optional[List[Ciphertext]] = None
        self.logger = logging.getLogger(__name__)

    @property
    def margin_bound(self) -> int:
        """M = 1 + sum_j |encode(w_j)| bounds |w^T x'| at codec resolution."""
        return 1 + sum(abs(self.codec.signed(m)) for m in self._encoded)

    @property
    def bit_width(self) -> int:
        return (2 * self.margin_bound).bit_length() + self.padding_bits

    def encrypted_weights(self) -> List[Ciphertext]:
        if self._enc_w is None:
            self._enc_w = paillier.encrypt_many(self.keys.public, self._encoded, self.rng, self.workers)
            self.counters.count_encrypt(len(self._enc_w))
            self.logger.debug("Precomputed E[w] for %d weights", len(self._enc_w))
        return self._enc_w

    def parameters(self) -> dict:
        return {'d': self.model.dim, 'C': self.codec.C, 'margin_bound': self.margin_bound,
                'bit_width': self.bit_width}

    def start_session(self, session_id: Optional[bytes] = None) -> "BobEvalSession":
        return BobEvalSession(self, session_id or new_session_id())


class BobEvalSession:
    """One evaluation dialogue on Bob's side."""

    def __init__(self, evaluator: BobEvaluator, session_id: bytes):
        self.evaluator = evaluator
        self.session_id = session_id
        self.phase = EvalPhase.AWAITING_WEIGHTS
        self.holder: Optional[ComparisonKeyHolder] = None
        self.label: Optional[int] = None

    def send_weights(self) -> ProtocolMessage:
        if self.phase != EvalPhase.AWAITING_WEIGHTS:
            raise ProtocolStateError(f"weights already sent ({self.phase.value})")
        ciphers = self.evaluator.encrypted_weights()
        self.evaluator.counters.count_sent('bob->carol', 'weights', len(ciphers))
        self.phase = EvalPhase.AWAITING_SHARE
        return ProtocolMessage.ciphertexts(MessageType.ENC_VECTOR, STEP_WEIGHTS, 1, ciphers, self.session_id)

    def receive_share(self, msg: ProtocolMessage) -> ProtocolMessage:
        """Decrypt E[w^T x' - r], derive s and open the comparison."""
        if self.phase != EvalPhase.AWAITING_SHARE:
            raise ProtocolStateError(f"share received while {self.phase.value}")
        if msg.type != MessageType.ENC_SCALARS:
            raise ProtocolStateError(f"expected ENC_SCALARS, got {msg.type.name}")
        step, _, ciphers = msg.cipher_payload()
        if step != STEP_SHARE or len(ciphers) != 1:
            raise ProtocolStateError("expected one encrypted share")
        ev = self.evaluator
        value = ev.codec.signed(paillier.decrypt(ev.keys.private, ev.keys.public, ciphers[0]))
        ev.counters.count_decrypt()
        s = -value
        self.holder = ComparisonKeyHolder(ev.keys, s, ev.bit_width, ev.rng, ev.counters, self.session_id)
        self.phase = EvalPhase.AWAITING_TERMS
        return self.holder.encrypt_bits()

    def receive_terms(self, msg: ProtocolMessage) -> ProtocolMessage:
        if self.phase != EvalPhase.AWAITING_TERMS:
            raise ProtocolStateError(f"comparison terms received while {self.phase.value}")
        reply = self.holder.detect_zero(msg)
        self.label = 1 if self.holder.result else -1
        self.phase = EvalPhase.DONE
        return reply


def carol_inner_product(pk: PublicKey, enc_w: Sequence[Ciphertext], x: SparseBinaryVector, r: int,
                        rng: Optional[random.Random] = None) -> Ciphertext:
    """
    E[w^T x' - r] from E[w] and a binary x'.

    Binary features only select entries of E[w], so every scaling exponent
    is 1 and the scale stays at 1.

    Raises:
        ValueError: If x' does not match the model dimension
    """
    if x.dim != len(enc_w):
        raise ValueError(f"document dimension {x.dim} does not match model dimension {len(enc_w)}")
    acc = Ciphertext(1)
    for j in x.indices.tolist():
        acc = paillier.hom_add(pk, acc, enc_w[j])
    return paillier.hom_add(pk, acc, paillier.encrypt(pk, (-r) % pk.n, rng=rng))


class CarolEvalSession:
    """Document owner's side of one evaluation."""

    def __init__(self, pk: PublicKey, x: SparseBinaryVector, margin_bound: int, bit_width: int,
                 rng: Optional[random.Random] = None, session_id: Optional[bytes] = None):
        if (1 << bit_width) - 1 - margin_bound < margin_bound:
            raise ValueError(f"bit width {bit_width} too small for margin bound {margin_bound}")
        self.pk = pk
        self.x = x
        self.margin_bound = margin_bound
        self.bit_width = bit_width
        self.rng = paillier.default_rng(rng)
        self.session_id = session_id
        self.counters = OpCounters()
        self.phase = EvalPhase.AWAITING_WEIGHTS
        self.initiator: Optional[ComparisonInitiator] = None
        self.label: Optional[int] = None

    def receive_weights(self, msg: ProtocolMessage) -> ProtocolMessage:
        if self.phase != EvalPhase.AWAITING_WEIGHTS:
            raise ProtocolStateError(f"weights received while {self.phase.value}")
        if msg.type != MessageType.ENC_VECTOR:
            raise ProtocolStateError(f"expected ENC_VECTOR, got {msg.type.name}")
        step, scale, enc_w = msg.cipher_payload()
        if step != STEP_WEIGHTS or scale != 1:
            raise ProtocolStateError("expected E[w] at scale 1")
        r = self.rng.randrange(self.margin_bound, (1 << self.bit_width) - self.margin_bound)
        share = carol_inner_product(self.pk, enc_w, self.x, r, self.rng)
        self.counters.count_encrypt()
        self.counters.count_sent('carol->bob', 'margin', 1)
        self.session_id = self.session_id or msg.session_id
        self.initiator = ComparisonInitiator(self.pk, r, self.bit_width, self.rng, self.counters)
        self.phase = EvalPhase.AWAITING_BITS
        return ProtocolMessage.ciphertexts(MessageType.ENC_SCALARS, STEP_SHARE, 1, [share], self.session_id)

    def receive_bits(self, msg: ProtocolMessage) -> ProtocolMessage:
        if self.phase != EvalPhase.AWAITING_BITS:
            raise ProtocolStateError(f"comparison bits received while {self.phase.value}")
        reply = self.initiator.blind_terms(msg)
        self.phase = EvalPhase.AWAITING_RESULT
        return reply

    def receive_result(self, msg: ProtocolMessage) -> int:
        if self.phase != EvalPhase.AWAITING_RESULT:
            raise ProtocolStateError(f"result received while {self.phase.value}")
        self.label = 1 if self.initiator.receive_result(msg) else -1
        self.phase = EvalPhase.DONE
        return self.label


def classify_private(evaluator: BobEvaluator, x: SparseBinaryVector,
                     rng: Optional[random.Random] = None) -> int:
    """
    Classify one document between in-process parties.

    Returns:
        int: +1 if w^T x' > 0 at codec resolution, else -1
    """
    bob = evaluator.start_session()
    params = evaluator.parameters()
    carol = CarolEvalSession(evaluator.keys.public, x, params['margin_bound'], params['bit_width'], rng)
    msg = carol.receive_weights(bob.send_weights())
    msg = carol.receive_bits(bob.receive_share(msg))
    return carol.receive_result(bob.receive_terms(msg))


def codec_margin(evaluator: BobEvaluator, x: SparseBinaryVector) -> int:
    """Plaintext w^T x' at codec resolution; the oracle classify_private must match in sign."""
    return sum(evaluator.codec.signed(evaluator._encoded[j]) for j in x.indices.tolist())

"""
Private training protocol.

Bob holds the model and the Paillier key pair; Alice holds a block of K
labeled documents. One round moves the model from w_t to w_(t+1) while
Bob sees only blinded values and Alice sees only ciphertexts:

  1      Bob encrypts w_t
  2, 3   Alice forms E[y_i w^T x_i] and blinds it additively with r_i
  4, 5   Bob decrypts v_i = m_i - r_i and returns E[e^v_i]
  6, 7   Alice unblinds with e^r_i, adds 1 and blinds multiplicatively with q_i
  8      Bob returns E[1 / (q_i (1 + e^m_i))]
  9, 10  Alice removes q_i and accumulates the encrypted gradient
  11     Alice returns E[w_t + eta * grad] (or the regularized update)
  12     Bob decrypts w_(t+1)

Each party is a state machine; a message arriving in the wrong phase is
rejected with ProtocolStateError and leaves the state untouched.
"""

import logging
import math
import os
import random
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..crypto import paillier
from ..crypto.fixedpoint import (
    CodecParams,
    ScaledCiphertext,
    add_plain,
    mul_int,
    mul_scaled,
    rebase,
    scaled_add,
)
from ..crypto.paillier import Ciphertext, KeyPair, PublicKey
from ..exceptions import DomainOverflowError, ProtocolAbort, ProtocolStateError, ScaleMismatchError
from ..learning.dataset import LabeledDataset
from ..learning.logistic import Model, update_weights
from ..transport.messages import MessageType, ProtocolMessage
from .blinding import BlindingSampler
from .counters import OpCounters, StepTimer
from .planning import ScalePlan

logger = logging.getLogger(__name__)

BOB_TO_ALICE = 'bob->alice'
ALICE_TO_BOB = 'alice->bob'


class BobPhase(Enum):
    START = 'start'
    AWAITING_MARGINS = 'awaiting blinded margins'
    AWAITING_LOGITS = 'awaiting scaled logits'
    AWAITING_UPDATE = 'awaiting update'
    ABORTED = 'aborted'


class AlicePhase(Enum):
    AWAITING_WEIGHTS = 'awaiting weights'
    AWAITING_EXPONENTIALS = 'awaiting exponentials'
    AWAITING_RECIPROCALS = 'awaiting reciprocals'
    DONE = 'done'
    ABORTED = 'aborted'


def new_session_id() -> bytes:
    return os.urandom(8)


class BobTrainerState:
    """
    Model owner's side of a training session.

    Attributes:
        keys (KeyPair): Bob's key pair; the private half never enters a message
        model (Model): Current weights w_t with eta and lambda
        codec (CodecParams): Codec bound to the public key
        plan (ScalePlan): Negotiated scale plan
        counters (OpCounters): Bob's operations and traffic
        timer (StepTimer): Bob's wall-clock time per step group
        phase (BobPhase): Position in the round
    """

    def __init__(self, keys: KeyPair, model: Model, codec: CodecParams, plan: ScalePlan,
                 rng: Optional[random.Random] = None, session_id: Optional[bytes] = None,
                 workers: int = 1):
        self.keys = keys
        self.model = model
        self.codec = codec
        self.plan = plan
        self.rng = paillier.default_rng(rng)
        self.session_id = session_id or new_session_id()
        self.workers = workers
        self.counters = OpCounters()
        self.timer = StepTimer()
        self.phase = BobPhase.START
        self.block_size = 0
        self.last_change = math.inf
        self.rounds = 0

    @property
    def pk(self) -> PublicKey:
        return self.keys.public

    def _decrypt(self, c: Ciphertext) -> int:
        return paillier.decrypt(self.keys.private, self.keys.public, c)

    def abort(self, reason: str) -> ProtocolAbort:
        """Discard round state and build the exception to raise."""
        self.phase = BobPhase.ABORTED
        self.block_size = 0
        logger.warning("Bob aborted the round: %s", reason)
        return ProtocolAbort(reason)

    def reset(self) -> None:
        """Start over from w_t after an abort."""
        self.phase = BobPhase.START
        self.block_size = 0


class AliceTrainerState:
    """
    Data owner's side of a training session.

    Attributes:
        pk (PublicKey): Bob's public key
        codec (CodecParams): Codec bound to pk
        plan (ScalePlan): Negotiated scale plan
        block (LabeledDataset): The K instances of this round
        eta (float): Step size
        reg_lambda (float): l2 coefficient
        sampler (BlindingSampler): Source of r_i and q_i
    """

    def __init__(self, pk: PublicKey, codec: CodecParams, plan: ScalePlan, block: LabeledDataset,
                 eta: float, reg_lambda: float = 0.0, sampler: Optional[BlindingSampler] = None,
                 rng: Optional[random.Random] = None, session_id: Optional[bytes] = None,
                 workers: int = 1):
        self.pk = pk
        self.codec = codec
        self.plan = plan
        self.eta = eta
        self.reg_lambda = reg_lambda
        self.sampler = sampler or BlindingSampler(plan.blind_bound, plan.q_bound)
        self.rng = paillier.default_rng(rng)
        self.session_id = session_id
        self.workers = workers
        self.counters = OpCounters()
        self.timer = StepTimer()
        self.phase = AlicePhase.DONE
        self.start_block(block)

    def start_block(self, block: LabeledDataset) -> None:
        """
        Take the instances for the next round; blinds are redrawn per round.

        Raises:
            ValueError: If the block is empty
            ProtocolStateError: If a round is in progress
        """
        if block.n == 0:
            raise ValueError("a training round needs at least one instance")
        if self.phase not in (AlicePhase.DONE, AlicePhase.AWAITING_WEIGHTS, AlicePhase.ABORTED):
            raise ProtocolStateError(f"cannot change blocks while {self.phase.value}")
        self.block = block
        self.enc_w: List[ScaledCiphertext] = []
        self.blinds_r: Optional[np.ndarray] = None
        self.blinds_q: Optional[List[int]] = None
        self.phase = AlicePhase.AWAITING_WEIGHTS

    @property
    def n(self) -> int:
        return self.block.n

    def abort(self, reason: str) -> ProtocolAbort:
        self.phase = AlicePhase.ABORTED
        self.enc_w, self.blinds_r, self.blinds_q = [], None, None
        logger.warning("Alice aborted the round: %s", reason)
        return ProtocolAbort(reason)


def _expect(state, phase, msg: ProtocolMessage, msg_type: MessageType, step: int,
            scale: int, count: Optional[int] = None) -> List[Ciphertext]:
    """Validate an incoming message against the receiver's phase; only a peer abort changes state."""
    if msg.type == MessageType.ABORT:
        raise state.abort(f"peer aborted: {msg.reason}")
    if state.phase != phase:
        raise ProtocolStateError(f"step {step} message received while {state.phase.value}")
    if state.session_id is not None and msg.session_id != state.session_id:
        raise ProtocolStateError("message belongs to a different session")
    if msg.type != msg_type:
        raise ProtocolStateError(f"expected {msg_type.name} for step {step}, got {msg.type.name}")
    got_step, got_scale, ciphers = msg.cipher_payload()
    if got_step != step:
        raise ProtocolStateError(f"expected step {step}, got step {got_step}")
    if got_scale != scale:
        raise ScaleMismatchError(f"step {step} values at scale {got_scale}, plan says {scale}")
    if count is not None and len(ciphers) != count:
        raise ProtocolStateError(f"step {step} carries {len(ciphers)} values, expected {count}")
    return ciphers


def margin_reach(w: np.ndarray) -> float:
    """Largest |w^T x| over all binary x: the larger of the positive and negative weight mass."""
    return float(max(np.sum(np.clip(w, 0.0, None)), np.sum(np.clip(-w, 0.0, None)), 0.0))


# Weights out

def bob_start_round(state: BobTrainerState) -> ProtocolMessage:
    """
    Encrypt w_t at scale 1.

    Raises:
        ProtocolStateError: If a round is already in progress
        ProtocolAbort: If w_t could produce margins beyond the plan's bound
    """
    if state.phase != BobPhase.START:
        raise ProtocolStateError(f"cannot start a round while {state.phase.value}")
    w = state.model.w
    reach = margin_reach(w)
    if reach > state.plan.margin_bound:
        raise state.abort(f"weights reach margin {reach:.4g} beyond the negotiated bound {state.plan.margin_bound}")
    with state.timer.step("encrypt-weights"):
        plaintexts = [state.codec.encode(float(value), 1) for value in w]
        ciphers = paillier.encrypt_many(state.pk, plaintexts, state.rng, state.workers)
    d = len(ciphers)
    state.counters.count_encrypt(d)
    state.counters.count_sent(BOB_TO_ALICE, "weights", d)
    state.phase = BobPhase.AWAITING_MARGINS
    logger.debug("Encrypted %d weights", d)
    return ProtocolMessage.ciphertexts(MessageType.ENC_VECTOR, 1, 1, ciphers, state.session_id)


# Blinded margins

def alice_blind_margins(state: AliceTrainerState, msg: ProtocolMessage) -> ProtocolMessage:
    """Return E[y_i w^T x_i - r_i] for every instance of the block."""
    ciphers = _expect(state, AlicePhase.AWAITING_WEIGHTS, msg, MessageType.ENC_VECTOR, 1, 1,
                      count=state.block.dim)
    pk, codec = state.pk, state.codec
    with state.timer.step("blind-margins"):
        margins = []
        for x, y in state.block:
            acc = Ciphertext(1)
            for j in x.indices.tolist():
                acc = paillier.hom_add(pk, acc, ciphers[j])
            if y < 0:
                acc = paillier.hom_negate(pk, acc)
            margins.append(acc)
        r = state.sampler.additive(state.n)
        blinds = paillier.encrypt_many(pk, [codec.encode(-float(ri), 1) for ri in r], state.rng, state.workers)
        blinded = [paillier.hom_add(pk, a, b) for a, b in zip(margins, blinds)]
    state.enc_w = [ScaledCiphertext(c, 1) for c in ciphers]
    if state.session_id is None:
        state.session_id = msg.session_id
    state.blinds_r = r
    state.counters.count_encrypt(state.n)
    state.counters.count_sent(ALICE_TO_BOB, "margins", state.n)
    state.phase = AlicePhase.AWAITING_EXPONENTIALS
    logger.debug("Blinded %d margins", state.n)
    return ProtocolMessage.ciphertexts(MessageType.ENC_SCALARS, 3, 1, blinded, state.session_id)


# Exponentials

def bob_exponentiate_share(state: BobTrainerState, msg: ProtocolMessage) -> ProtocolMessage:
    """Decrypt each blinded margin v and return E[e^v] at the plan's exp_scale."""
    ciphers = _expect(state, BobPhase.AWAITING_MARGINS, msg, MessageType.ENC_SCALARS, 3, 1)
    if not ciphers:
        raise ProtocolStateError("margin message carries no instances")
    codec, plan = state.codec, state.plan
    with state.timer.step("exponentiate"):
        shares = [codec.signed(state._decrypt(c)) / codec.C for c in ciphers]
        worst = max(abs(v) for v in shares)
        if worst > plan.share_bound:
            raise state.abort(f"blinded margin {worst:.4g} outside the bound {plan.share_bound}")
        try:
            plaintexts = [codec.encode(math.exp(v), plan.exp_scale) for v in shares]
        except DomainOverflowError as exc:
            raise state.abort(f"exponential overflow: {exc}") from exc
        out = paillier.encrypt_many(state.pk, plaintexts, state.rng, state.workers)
    n = len(out)
    state.block_size = n
    state.counters.count_decrypt(n)
    state.counters.count_encrypt(n)
    state.counters.count_reencrypt(n)
    state.counters.count_sent(BOB_TO_ALICE, "exponentials", n)
    state.phase = BobPhase.AWAITING_LOGITS
    logger.debug("Exponentiated %d shares", n)
    return ProtocolMessage.ciphertexts(MessageType.ENC_SCALARS, 5, plan.exp_scale, out, state.session_id)


# Unblinding

def alice_unblind_and_scale(state: AliceTrainerState, msg: ProtocolMessage) -> ProtocolMessage:
    """Return E[q_i (1 + e^(y_i w^T x_i))] at the plan's logit scale."""
    plan = state.plan
    ciphers = _expect(state, AlicePhase.AWAITING_EXPONENTIALS, msg, MessageType.ENC_SCALARS, 5,
                      plan.exp_scale, count=state.n)
    pk, codec = state.pk, state.codec
    with state.timer.step("unblind"):
        q = state.sampler.multiplicative(state.n)
        out = []
        for c, ri, qi in zip(ciphers, state.blinds_r, q):
            value = mul_scaled(pk, codec, ScaledCiphertext(c, plan.exp_scale), math.exp(float(ri)),
                               plan.unblind_scale)
            value = add_plain(pk, codec, value, 1.0)
            out.append(mul_int(pk, value, qi))
    state.blinds_q = q
    state.counters.count_sent(ALICE_TO_BOB, "denominators", state.n)
    state.phase = AlicePhase.AWAITING_RECIPROCALS
    logger.debug("Unblinded and rescaled %d values", state.n)
    return ProtocolMessage.ciphertexts(MessageType.ENC_SCALARS, 7, plan.logit_scale,
                                       [v.cipher for v in out], state.session_id)


# Reciprocals

def bob_reciprocal(state: BobTrainerState, msg: ProtocolMessage) -> ProtocolMessage:
    """Decrypt q (1 + e^m), return E[1 / (q (1 + e^m))] at the plan's recip_scale."""
    plan = state.plan
    ciphers = _expect(state, BobPhase.AWAITING_LOGITS, msg, MessageType.ENC_SCALARS, 7,
                      plan.logit_scale, count=state.block_size)
    codec = state.codec
    with state.timer.step("reciprocal"):
        values = [codec.signed(state._decrypt(c)) for c in ciphers]
        if min(values) <= 0:
            raise state.abort("non-positive denominator")
        # floor(C^recip / z) with z = value / C^logit, in exact integers
        numerator = codec.factor(plan.logit_scale + plan.recip_scale)
        out = paillier.encrypt_many(state.pk, [numerator // z for z in values], state.rng, state.workers)
    n = len(out)
    state.counters.count_decrypt(n)
    state.counters.count_encrypt(n)
    state.counters.count_reencrypt(n)
    state.counters.count_sent(BOB_TO_ALICE, "reciprocals", n)
    state.phase = BobPhase.AWAITING_UPDATE
    logger.debug("Returned %d reciprocals", n)
    return ProtocolMessage.ciphertexts(MessageType.ENC_SCALARS, 8, plan.recip_scale, out, state.session_id)


# Gradient

def _encrypted_gradient(state: AliceTrainerState, ciphers: Sequence[Ciphertext]) -> List[ScaledCiphertext]:
    pk, scale = state.pk, state.plan.recip_scale
    d = state.block.dim
    positive = [Ciphertext(1)] * d
    negative = [Ciphertext(1)] * d
    for (x, y), c, qi in zip(state.block, ciphers, state.blinds_q):
        sigma = paillier.hom_scale(pk, c, qi)
        target = positive if y > 0 else negative
        for j in x.indices.tolist():
            target[j] = paillier.hom_add(pk, target[j], sigma)
    gradient = []
    for pos, neg in zip(positive, negative):
        if neg.value != 1:
            pos = paillier.hom_add(pk, pos, paillier.hom_negate(pk, neg))
        gradient.append(ScaledCiphertext(pos, scale))
    return gradient


def alice_encrypted_gradient(state: AliceTrainerState, msg: ProtocolMessage) -> List[ScaledCiphertext]:
    """
    Gradient only: E[grad L] at the plan's recip_scale.

    Used when several data owners pool their gradients under Bob's key.
    The round ends for Alice after this call.
    """
    ciphers = _expect(state, AlicePhase.AWAITING_RECIPROCALS, msg, MessageType.ENC_SCALARS, 8,
                      state.plan.recip_scale, count=state.n)
    with state.timer.step("gradient"):
        gradient = _encrypted_gradient(state, ciphers)
    state.blinds_r, state.blinds_q = None, None
    state.phase = AlicePhase.DONE
    return gradient


# Update

def alice_finish_gradient(state: AliceTrainerState, msg: ProtocolMessage) -> ProtocolMessage:
    """Return E[w_(t+1)] at the plan's update scale."""
    plan = state.plan
    ciphers = _expect(state, AlicePhase.AWAITING_RECIPROCALS, msg, MessageType.ENC_SCALARS, 8,
                      plan.recip_scale, count=state.n)
    pk, codec = state.pk, state.codec
    with state.timer.step("gradient"):
        gradient = _encrypted_gradient(state, ciphers)
    with state.timer.step("update"):
        updated = []
        for grad_j, w_j in zip(gradient, state.enc_w):
            step = mul_scaled(pk, codec, grad_j, state.eta, 1)
            if state.reg_lambda:
                w_j = mul_scaled(pk, codec, w_j, 1.0 + 2.0 * state.reg_lambda, 1)
            updated.append(scaled_add(pk, step, rebase(pk, codec, w_j, plan.update_scale)))
    d = len(updated)
    state.counters.count_sent(ALICE_TO_BOB, "update", d)
    state.blinds_r, state.blinds_q = None, None
    state.phase = AlicePhase.DONE
    logger.debug("Returned %d updated weights", d)
    return ProtocolMessage.ciphertexts(MessageType.ENC_VECTOR, 11, plan.update_scale,
                                       [v.cipher for v in updated], state.session_id)


# Commit

def _commit(state: BobTrainerState, w: np.ndarray) -> Model:
    if not np.all(np.isfinite(w)):
        raise state.abort("decoded weights are not finite")
    state.last_change = float(np.max(np.abs(w - state.model.w))) if w.size else 0.0
    state.model = state.model.with_weights(w)
    state.phase = BobPhase.START
    state.block_size = 0
    state.rounds += 1
    return state.model


def bob_finish_round(state: BobTrainerState, msg: ProtocolMessage) -> Model:
    """Decrypt w_(t+1), make it the current model and return it."""
    scale = state.plan.update_scale
    ciphers = _expect(state, BobPhase.AWAITING_UPDATE, msg, MessageType.ENC_VECTOR, 11, scale,
                      count=state.model.dim)
    with state.timer.step("update"):
        w = np.array([state.codec.decode(state._decrypt(c), scale) for c in ciphers], dtype=np.float64)
    state.counters.count_decrypt(len(ciphers))
    model = _commit(state, w)
    logger.debug("Round %d committed, max weight change %.3g", state.rounds, state.last_change)
    return model


def aggregate_multi_party(state: BobTrainerState, gradients: Sequence[Sequence[ScaledCiphertext]]) -> Model:
    """
    Sum encrypted gradients from several data owners, then update in the clear.

    Args:
        state (BobTrainerState): Bob's state holding w_t
        gradients: One E[grad] vector per party, all at the same scale

    Returns:
        Model: w_t + eta * sum_k grad_k (regularized when lambda > 0)

    Raises:
        ScaleMismatchError: If the vectors are at different scales
        ValueError: If no gradients are given or a vector has the wrong length
    """
    if state.phase not in (BobPhase.START, BobPhase.AWAITING_UPDATE):
        raise ProtocolStateError(f"cannot aggregate while {state.phase.value}")
    if not gradients:
        raise ValueError("no gradients to aggregate")
    d = state.model.dim
    for vector in gradients:
        if len(vector) != d:
            raise ValueError(f"gradient of length {len(vector)}, model has {d} weights")
    total = list(gradients[0])
    for vector in gradients[1:]:
        total = [scaled_add(state.pk, a, b) for a, b in zip(total, vector)]
    grad = np.array([state.codec.decode(state._decrypt(g.cipher), g.scale) for g in total], dtype=np.float64)
    state.counters.count_decrypt(d)
    model = state.model
    w = update_weights(model.w, grad, model.eta, model.reg_lambda)
    logger.debug("Aggregated gradients from %d parties", len(gradients))
    return _commit(state, w)


def run_protocol_round(bob: BobTrainerState, alice: AliceTrainerState) -> Model:
    """Drive one full round between two in-process states (no transport)."""
    msg = bob_start_round(bob)
    msg = alice_blind_margins(alice, msg)
    msg = bob_exponentiate_share(bob, msg)
    msg = alice_unblind_and_scale(alice, msg)
    msg = bob_reciprocal(bob, msg)
    msg = alice_finish_gradient(alice, msg)
    return bob_finish_round(bob, msg)


def session_counters(bob: BobTrainerState, alice: AliceTrainerState) -> Tuple[OpCounters, StepTimer]:
    return bob.counters.merge(alice.counters), bob.timer.merge(alice.timer)

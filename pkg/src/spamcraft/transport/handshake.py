"""
Session handshake.

The client (Alice for training, Carol for evaluation) opens with a HELLO
listing the parameters it expects; Bob answers with the authoritative
session terms: public key, scale constant, dimension and, for training,
the step size and scale plan. Any disagreement aborts before a single
ciphertext is exchanged.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

from ..crypto.paillier import PublicKey
from ..exceptions import CryptoError, FrameError, HandshakeError
from ..protocol.planning import ScalePlan
from .messages import PROTOCOL_VERSION, SESSION_ID_BYTES, MessageType, ProtocolMessage

logger = logging.getLogger(__name__)

SESSION_KINDS = ('train', 'eval')


@dataclass(frozen=True)
class SessionTerms:
    """
    Parameters both parties hold after a successful handshake.

    Attributes:
        kind (str): 'train' or 'eval'
        public_key (PublicKey): Bob's public key
        C (int): Scale constant
        d (int): Feature dimension
        block_size (int): Instances per round K (training)
        eta (float): Step size (training)
        reg_lambda (float): l2 coefficient (training)
        plan (ScalePlan, optional): Scale plan (training)
        margin_bound (int): Public margin bound M (evaluation)
        bit_width (int): Comparison width (evaluation)
    """
    kind: str
    public_key: PublicKey
    C: int
    d: int
    block_size: int = 0
    eta: float = 0.0
    reg_lambda: float = 0.0
    plan: Optional[ScalePlan] = None
    margin_bound: int = 0
    bit_width: int = 0

    def to_fields(self) -> Dict[str, str]:
        pk = self.public_key
        fields = {'session': self.kind, 'version': str(PROTOCOL_VERSION), 'bits': str(pk.bits),
                  'N': str(pk.n), 'g': str(pk.g), 'C': str(self.C), 'd': str(self.d)}
        if self.kind == 'train':
            fields.update({'K': str(self.block_size), 'eta': repr(float(self.eta)),
                           'lambda': repr(float(self.reg_lambda))})
            fields.update(self.plan.to_fields())
        else:
            fields.update({'margin_bound': str(self.margin_bound), 'bit_width': str(self.bit_width)})
        return fields

    @classmethod
    def from_fields(cls, fields: Dict[str, str]) -> "SessionTerms":
        """
        Raises:
            HandshakeError: If a field is missing or malformed
        """
        try:
            kind = fields['session']
            pk = PublicKey(int(fields['N']), int(fields['g']), int(fields['bits']))
            common = dict(kind=kind, public_key=pk, C=int(fields['C']), d=int(fields['d']))
            if kind == 'train':
                return cls(block_size=int(fields['K']), eta=float(fields['eta']),
                           reg_lambda=float(fields['lambda']), plan=ScalePlan.from_fields(fields), **common)
            if kind == 'eval':
                return cls(margin_bound=int(fields['margin_bound']), bit_width=int(fields['bit_width']), **common)
        except (KeyError, ValueError, CryptoError) as exc:
            raise HandshakeError(f"malformed session terms: {exc}") from exc
        raise HandshakeError(f"unknown session kind '{kind}'")


def client_hello(kind: str, d: int, C: int, bits: int, block_size: int = 0) -> ProtocolMessage:
    """HELLO from the client; zero for a parameter means no expectation."""
    if kind not in SESSION_KINDS:
        raise ValueError(f"session kind must be one of {list(SESSION_KINDS)}, got '{kind}'")
    return ProtocolMessage.key_values(MessageType.HANDSHAKE, {
        'hello': kind, 'version': PROTOCOL_VERSION, 'd': d, 'C': C, 'bits': bits, 'K': block_size})


def _handshake_fields(msg: ProtocolMessage) -> Dict[str, str]:
    if msg.type == MessageType.ABORT:
        raise HandshakeError(f"peer refused the session: {msg.reason}")
    if msg.type != MessageType.HANDSHAKE:
        raise HandshakeError(f"expected HANDSHAKE, got {msg.type.name}")
    if msg.version != PROTOCOL_VERSION:
        raise HandshakeError(f"protocol version {msg.version}, expected {PROTOCOL_VERSION}")
    try:
        return msg.as_mapping()
    except FrameError as exc:
        raise HandshakeError(str(exc)) from exc


def parse_hello(hello: ProtocolMessage) -> Dict[str, str]:
    """
    Fields of a client HELLO.

    Raises:
        HandshakeError: If the message is not a HELLO for a known session kind
    """
    values = _handshake_fields(hello)
    if values.get('hello') not in SESSION_KINDS:
        raise HandshakeError(f"unknown session kind '{values.get('hello')}'")
    return values


def hello_int(values: Dict[str, str], key: str) -> int:
    try:
        return int(values.get(key, '0'))
    except ValueError as exc:
        raise HandshakeError(f"field '{key}' is not an integer") from exc


def _check(name: str, offered: int, required: int) -> None:
    if offered and offered != required:
        raise HandshakeError(f"{name} mismatch: peer expects {offered}, session uses {required}")


def server_accept(hello: ProtocolMessage, terms: SessionTerms, session_id: bytes) -> ProtocolMessage:
    """
    Validate a client HELLO against Bob's terms and build the reply.

    Raises:
        HandshakeError: On any disagreement; the caller sends an ABORT
    """
    values = parse_hello(hello)
    kind = values.get('hello')
    if kind != terms.kind:
        raise HandshakeError(f"client asked for a '{kind}' session, this endpoint serves '{terms.kind}'")
    _check('dimension', hello_int(values, 'd'), terms.d)
    _check('scale constant', hello_int(values, 'C'), terms.C)
    _check('key size', hello_int(values, 'bits'), terms.public_key.bits)
    if terms.kind == 'train':
        _check('block size', hello_int(values, 'K'), terms.block_size)
    logger.info("Accepted %s session (d=%d, %d-bit key)", terms.kind, terms.d, terms.public_key.bits)
    return ProtocolMessage.key_values(MessageType.HANDSHAKE, terms.to_fields(), session_id)


def client_confirm(reply: ProtocolMessage, kind: str, d: int = 0, C: int = 0,
                   min_bits: int = 0) -> SessionTerms:
    """
    Read Bob's terms and check them against the client's expectations.

    Returns:
        SessionTerms: The negotiated terms; the session id is reply.session_id

    Raises:
        HandshakeError: If Bob refused or offered terms the client cannot accept
    """
    terms = SessionTerms.from_fields(_handshake_fields(reply))
    if terms.kind != kind:
        raise HandshakeError(f"server opened a '{terms.kind}' session, expected '{kind}'")
    if reply.session_id == bytes(SESSION_ID_BYTES):
        raise HandshakeError("server did not assign a session id")
    _check('dimension', d, terms.d)
    _check('scale constant', C, terms.C)
    if terms.public_key.bits < min_bits:
        raise HandshakeError(f"server key has {terms.public_key.bits} bits, client requires {min_bits}")
    return terms

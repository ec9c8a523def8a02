"""
Scale planning for the training protocol.

Every Bob decryption resets the scale exponent; Bob then re-encrypts at a
public exponent chosen here. The plan fixes:

- ``exp_scale``: scale of Bob's exponentials e^v
- ``unblind_scale``: scale of Alice's unblinding factor e^r
- ``recip_scale``: scale of Bob's reciprocals
- ``q_bound``: size |D| of the multiplicative blind domain

so that no intermediate between the exponentials and the update leaves the plaintext domain while
the sigmoid keeps at least ``precision`` absolute accuracy. It assumes
|w^T x| <= margin_bound, which Bob checks against his own weights before
each round.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict

from ..exceptions import ConfigurationError
from ..crypto.fixedpoint import CodecParams

logger = logging.getLogger(__name__)

DEFAULT_MARGIN_BOUND = 16.0
DEFAULT_PRECISION = 1e-9

# Cap on |D|; larger domains add no blinding in practice and overflow float sampling
MAX_Q_BOUND = 1 << 256

# Headroom factor kept below (N - 1) / 2 at every capacity check
HEADROOM = 2


@dataclass(frozen=True)
class ScalePlan:
    """
    Public scale exponents and bounds shared by both parties.

    Attributes:
        exp_scale (int): Scale of Bob's E[e^v]
        unblind_scale (int): Scale of Alice's unblinding factor encode(e^r)
        recip_scale (int): Scale of Bob's E[1/(q z)]
        q_bound (int): Multiplicative blind domain |D|
        margin_bound (float): Assumed bound M on |w^T x|
        blind_bound (float): Additive blind range R
    """
    exp_scale: int
    unblind_scale: int
    recip_scale: int
    q_bound: int
    margin_bound: float
    blind_bound: float

    @property
    def logit_scale(self) -> int:
        """Scale of E[q (1 + e^m)] as Alice returns it."""
        return self.exp_scale + self.unblind_scale

    @property
    def update_scale(self) -> int:
        """Scale of E[w_(t+1)] returned by Alice."""
        return self.recip_scale + 1

    @property
    def share_bound(self) -> float:
        """Largest blinded margin |v| Bob accepts."""
        return self.margin_bound + self.blind_bound

    def to_fields(self) -> Dict[str, str]:
        return {key: repr(value) if isinstance(value, float) else str(value)
                for key, value in asdict(self).items()}

    @classmethod
    def from_fields(cls, fields: Dict[str, str]) -> "ScalePlan":
        return cls(
            exp_scale=int(fields['exp_scale']),
            unblind_scale=int(fields['unblind_scale']),
            recip_scale=int(fields['recip_scale']),
            q_bound=int(fields['q_bound']),
            margin_bound=float(fields['margin_bound']),
            blind_bound=float(fields['blind_bound']),
        )


def _ceil_int(x: float) -> int:
    if not math.isfinite(x):
        raise ConfigurationError(f"scale plan bound is not finite: {x}")
    return int(math.ceil(x))


def plan_scales(params: CodecParams, blind_bound: float, margin_bound: float = DEFAULT_MARGIN_BOUND,
                block_size: int = 100, eta: float = 0.001, reg_lambda: float = 0.0,
                precision: float = DEFAULT_PRECISION) -> ScalePlan:
    """
    Choose scale exponents and |D| for a key, scale constant and session.

    Args:
        params (CodecParams): Codec bound to the session key
        blind_bound (float): Additive blind range R
        margin_bound (float): Assumed bound M on |w^T x|
        block_size (int): Instances per gradient update K
        eta (float): Step size
        reg_lambda (float): l2 coefficient
        precision (float): Target absolute accuracy of each sigmoid value

    Returns:
        ScalePlan: Feasible plan

    Raises:
        ConfigurationError: If the key is too small for the requested bounds
    """
    C = params.C
    if C < 2:
        raise ConfigurationError("scale constant must be >= 2 for the training protocol")
    max_int = params.max_int
    inverse_precision = _ceil_int(1.0 / precision)

    # e^v and e^r both need C^s >= e^R / precision
    blind_factor = _ceil_int(math.exp(blind_bound)) * inverse_precision
    exp_scale = 1
    while C ** exp_scale < blind_factor:
        exp_scale += 1
    unblind_scale = exp_scale

    # exponentials: e^v <= e^(M + R) at exp_scale
    if HEADROOM * _ceil_int(math.exp(margin_bound + blind_bound)) * C ** exp_scale > max_int:
        raise ConfigurationError(
            f"{params.n.bit_length()}-bit key cannot hold e^(M+R) with M={margin_bound}, R={blind_bound}, C={C}")

    # unblinded denominators: q * (1 + e^M) at exp_scale + unblind_scale
    logit_max = _ceil_int(1.0 + math.exp(margin_bound))
    q_capacity = max_int // (HEADROOM * logit_max * C ** (exp_scale + unblind_scale))

    # update: K * eta * C^(s+1) gradient plus (1 + 2 lambda) * M * C^(s+1) weights
    update_max = _ceil_int(block_size * eta + (1.0 + 2.0 * reg_lambda) * margin_bound + 1.0)
    recip_scale = 0
    while HEADROOM * update_max * C ** (recip_scale + 2) <= max_int:
        recip_scale += 1
    if recip_scale < 1:
        raise ConfigurationError(f"{params.n.bit_length()}-bit key cannot hold the weight update")

    # reciprocal of q * (1 + e^m) keeps `precision` relative digits
    q_precision = C ** recip_scale // (logit_max * inverse_precision)
    q_bound = min(q_capacity, q_precision, MAX_Q_BOUND)
    if q_bound < 2:
        raise ConfigurationError(
            f"{params.n.bit_length()}-bit key leaves no room for multiplicative blinds "
            f"(C={C}, R={blind_bound}, M={margin_bound}); use a larger key or smaller bounds")

    plan = ScalePlan(exp_scale=exp_scale, unblind_scale=unblind_scale, recip_scale=recip_scale,
                     q_bound=int(q_bound), margin_bound=float(margin_bound), blind_bound=float(blind_bound))
    logger.debug("Scale plan: exp=%d unblind=%d recip=%d |D|~2^%d",
                 exp_scale, unblind_scale, recip_scale, plan.q_bound.bit_length())
    return plan

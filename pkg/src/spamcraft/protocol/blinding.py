"""
Blinding samplers for the training protocol.

Additive blinds r are real and uniform on [-R, R]. Multiplicative blinds q
are integers on [1, |D|] with P(q) proportional to 1/q, drawn by inverse
transform: q = floor(exp(U * ln |D|)) for U uniform on [0, 1).
"""

import math
import secrets
from typing import List, Optional

import numpy as np

DEFAULT_BLIND_BOUND = 32.0
SEED_BITS = 128


def secure_generator() -> np.random.Generator:
    """Generator seeded with 128 bits from the operating system CSPRNG."""
    return np.random.default_rng(secrets.randbits(SEED_BITS))


class BlindingSampler:
    """
    Draws fresh additive and multiplicative blinds.

    Attributes:
        r_bound (float): Additive range R
        q_bound (int): Multiplicative domain size |D|
    """

    def __init__(self, r_bound: float = DEFAULT_BLIND_BOUND, q_bound: int = 2,
                 rng: Optional[np.random.Generator] = None):
        if r_bound < 0:
            raise ValueError(f"additive blind bound must be nonnegative, got {r_bound}")
        if q_bound < 1:
            raise ValueError(f"multiplicative domain must be >= 1, got {q_bound}")
        self.r_bound = float(r_bound)
        self.q_bound = int(q_bound)
        self.rng = rng if rng is not None else secure_generator()

    def additive(self, count: int) -> np.ndarray:
        """``count`` reals uniform on [-R, R]."""
        return self.rng.uniform(-self.r_bound, self.r_bound, size=count)

    def multiplicative(self, count: int) -> List[int]:
        """``count`` integers on [1, |D|] with P(q) proportional to 1/q."""
        u = self.rng.random(count)
        log_d = math.log(self.q_bound)
        draws = np.floor(np.exp(u * log_d))
        return [min(max(int(q), 1), self.q_bound) for q in draws]

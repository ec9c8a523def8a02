"""
Operation counters and per-step timers for protocol sessions.
"""

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator

import pandas as pd

# Phases reported per round in protocol order; Bob's final decryption is charged to "update"
STEP_GROUPS = ("encrypt-weights", "blind-margins", "exponentiate", "unblind", "reciprocal", "gradient", "update")


@dataclass
class OpCounters:
    """
    Cryptographic work and traffic of one party (or a merged session).

    A re-encryption is a decryption followed by an encryption of the same
    element by the key holder; the cipher-operation cost counts it once.

    Attributes:
        encryptions (int): Fresh encryptions
        decryptions (int): Decryptions
        reencryptions (int): Decrypt-then-encrypt pairs
        sent (Dict[str, int]): Ciphertext elements sent, per direction
        per_step (Dict[str, int]): Ciphertext elements sent, per protocol step
    """
    encryptions: int = 0
    decryptions: int = 0
    reencryptions: int = 0
    sent: Dict[str, int] = field(default_factory=lambda: defaultdict(int))
    per_step: Dict[str, int] = field(default_factory=lambda: defaultdict(int))

    def count_encrypt(self, count: int = 1) -> None:
        self.encryptions += count

    def count_decrypt(self, count: int = 1) -> None:
        self.decryptions += count

    def count_reencrypt(self, count: int = 1) -> None:
        self.reencryptions += count

    def count_sent(self, direction: str, step: str, count: int) -> None:
        self.sent[direction] += count
        self.per_step[step] += count

    @property
    def elements_sent(self) -> int:
        return sum(self.sent.values())

    @property
    def cipher_operations(self) -> int:
        return self.encryptions + self.decryptions - self.reencryptions

    def merge(self, other: "OpCounters") -> "OpCounters":
        merged = OpCounters(
            encryptions=self.encryptions + other.encryptions,
            decryptions=self.decryptions + other.decryptions,
            reencryptions=self.reencryptions + other.reencryptions,
        )
        for source in (self, other):
            for key, value in source.sent.items():
                merged.sent[key] += value
            for key, value in source.per_step.items():
                merged.per_step[key] += value
        return merged

    def to_dict(self) -> Dict[str, int]:
        return {
            'encryptions': self.encryptions,
            'decryptions': self.decryptions,
            'reencryptions': self.reencryptions,
            'cipher_operations': self.cipher_operations,
            'elements_sent': self.elements_sent,
        }


class StepTimer:
    """Accumulates monotonic wall-clock time per step group."""

    def __init__(self):
        self.seconds: Dict[str, float] = defaultdict(float)

    @contextmanager
    def step(self, group: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[group] += time.perf_counter() - start

    def merge(self, other: "StepTimer") -> "StepTimer":
        merged = StepTimer()
        for source in (self, other):
            for key, value in source.seconds.items():
                merged.seconds[key] += value
        return merged

    def to_frame(self) -> pd.DataFrame:
        """One row per step group in protocol order."""
        rows = [{'steps': group, 'seconds': self.seconds.get(group, 0.0)} for group in STEP_GROUPS]
        return pd.DataFrame(rows, columns=['steps', 'seconds'])

    @property
    def total(self) -> float:
        return float(sum(self.seconds.values()))

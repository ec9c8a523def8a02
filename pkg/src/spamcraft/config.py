"""
Run configuration.

A RunConfig holds every parameter of a training, evaluation or bench run.
Config files are flat ``key=value`` text; ``#`` starts a comment. Command
line flags override file values. One master seed fans out to every
randomized component by labeled derivation, so a run is reproducible
from (config, seed).
"""

import hashlib
import logging
import random
import secrets
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np

from .crypto.fixedpoint import DEFAULT_SCALE, CodecParams, check_key_capacity
from .crypto.paillier import MIN_KEY_BITS
from .exceptions import ConfigurationError
from .features.fourgram import DEFAULT_HASH_SPACE, DEFAULT_PREFIX_LIMIT
from .learning.logistic import DEFAULT_ETA, DEFAULT_MAX_ITERS, DEFAULT_TOL
from .protocol.blinding import DEFAULT_BLIND_BOUND, secure_generator
from .protocol.evaluation import DEFAULT_PADDING_BITS
from .protocol.planning import DEFAULT_MARGIN_BOUND, ScalePlan, plan_scales
from .reduction.base_reducer import METHODS
from .transport.messages import DEFAULT_MAX_FRAME_BYTES

logger = logging.getLogger(__name__)

SECURE_KEY_BITS = 1024
TRANSPORTS = ('inproc', 'socket')
MODES = ('online', 'batch')


@dataclass(frozen=True)
class RunConfig:
    """
    Parameters of one run.

    Attributes:
        key_bits (int): Paillier modulus size b
        scale (int): Fixed-point scale constant C
        eta (float): Step size
        reg_lambda (float): l2 coefficient
        block_size (int): Instances per gradient update K
        blind_bound (float): Additive blind range R
        margin_bound (float): Public bound M on |w^T x|
        mode (str): online (one update per block) or batch (whole set per round)
        rounds (int): Batch rounds
        passes (int): Online passes over the data
        tol (float): Batch convergence tolerance
        max_iters (int): Plaintext batch iteration cap
        reduction (str, optional): Reduction method applied before training
        reduction_dim (int, optional): Reduced dimension k (modulus m for hashspace)
        df_threshold (int): Threshold for dfprune
        prefix_limit (int): Bytes read per document
        hash_space (int): Four-gram hash space
        transport (str): inproc or socket
        address (str): host:port for socket transport
        seed (int, optional): Master seed; None draws cryptographic randomness
        corpus (str, optional): Training corpus directory
        labels (str, optional): Label file; defaults to corpus/labels.tsv
        test_corpus (str, optional): Held-out corpus directory
        workers (int): Threads for bulk encryption and ingestion
        comparison_padding (int): Extra bits of the evaluation comparison range
        allow_insecure_keys (bool): Permit b below 1024
        max_frame_bytes (int): Largest accepted wire frame
        timeout (float): Socket timeout in seconds
    """
    key_bits: int = SECURE_KEY_BITS
    scale: int = DEFAULT_SCALE
    eta: float = DEFAULT_ETA
    reg_lambda: float = 0.0
    block_size: int = 100
    blind_bound: float = DEFAULT_BLIND_BOUND
    margin_bound: float = DEFAULT_MARGIN_BOUND
    mode: str = 'online'
    rounds: int = 10
    passes: int = 1
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    reduction: Optional[str] = None
    reduction_dim: Optional[int] = None
    df_threshold: int = 1
    prefix_limit: int = DEFAULT_PREFIX_LIMIT
    hash_space: int = DEFAULT_HASH_SPACE
    transport: str = 'inproc'
    address: str = '127.0.0.1:7007'
    seed: Optional[int] = None
    corpus: Optional[str] = None
    labels: Optional[str] = None
    test_corpus: Optional[str] = None
    workers: int = 1
    comparison_padding: int = DEFAULT_PADDING_BITS
    allow_insecure_keys: bool = False
    max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES
    timeout: float = 60.0

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        """
        Build a config from string or typed values.

        Raises:
            ConfigurationError: On an unknown key or a value of the wrong type
        """
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            name = key.strip().replace('-', '_')
            if name not in known:
                raise ConfigurationError(f"unknown config key '{key}'. Available: {sorted(known)}")
            kwargs[name] = _coerce(name, known[name].default, raw)
        return cls(**kwargs)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply overrides whose value is not None (command-line flags win over the file)."""
        present = {k: v for k, v in overrides.items() if v is not None}
        if not present:
            return self
        merged = self.to_dict()
        merged.update(present)
        return RunConfig.from_mapping(merged)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def validate(self, under_test: bool = False) -> "RunConfig":
        """
        Check every constraint that can be checked before a session starts.

        Args:
            under_test (bool): Skip the insecure-key guard (test harnesses only)

        Raises:
            ConfigurationError: If any parameter is invalid or infeasible
        """
        if self.key_bits < MIN_KEY_BITS or self.key_bits % 2:
            raise ConfigurationError(f"key size must be even and >= {MIN_KEY_BITS}, got {self.key_bits}")
        if self.key_bits < SECURE_KEY_BITS and not (self.allow_insecure_keys or under_test):
            raise ConfigurationError(
                f"{self.key_bits}-bit keys are insecure; pass --allow-insecure-keys to use them")
        if self.scale < 2:
            raise ConfigurationError(f"scale constant must be >= 2, got {self.scale}")
        if self.eta <= 0:
            raise ConfigurationError(f"step size must be positive, got {self.eta}")
        if self.reg_lambda < 0:
            raise ConfigurationError(f"regularization must be nonnegative, got {self.reg_lambda}")
        if self.block_size < 1:
            raise ConfigurationError(f"block size must be >= 1, got {self.block_size}")
        if self.blind_bound < 0 or self.margin_bound <= 0:
            raise ConfigurationError("blind bound must be >= 0 and margin bound > 0")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {list(MODES)}, got '{self.mode}'")
        if self.transport not in TRANSPORTS:
            raise ConfigurationError(f"transport must be one of {list(TRANSPORTS)}, got '{self.transport}'")
        if self.rounds < 1 or self.passes < 1:
            raise ConfigurationError("rounds and passes must be >= 1")
        if self.reduction is not None:
            if self.reduction not in METHODS:
                raise ConfigurationError(f"Reduction method '{self.reduction}' not found. Available: {list(METHODS)}")
            if self.reduction_dim is None and self.reduction != 'dfprune':
                raise ConfigurationError(f"reduction '{self.reduction}' needs reduction_dim")
        try:
            check_key_capacity(self.key_bits, self.scale, self.margin_bound + self.blind_bound)
            self.scale_plan(1 << (self.key_bits - 1))
        except OverflowError as exc:
            raise ConfigurationError(str(exc)) from exc
        parse_address(self.address)
        return self

    def scale_plan(self, n: int) -> ScalePlan:
        """Scale plan for a modulus n; the smallest b-bit modulus gives the most conservative plan."""
        return plan_scales(CodecParams(self.scale, n), self.blind_bound, self.margin_bound,
                           self.block_size, self.eta, self.reg_lambda)

    def describe(self) -> Dict[str, str]:
        """Provenance pairs echoed into result headers."""
        return {k: '' if v is None else str(v) for k, v in self.to_dict().items()}


def _coerce(name: str, default: Any, raw: Any) -> Any:
    if raw is None or isinstance(raw, bool) or not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ('', 'none', 'null'):
        return None
    try:
        if isinstance(default, bool) or name == 'allow_insecure_keys':
            if text.lower() in ('1', 'true', 'yes', 'on'):
                return True
            if text.lower() in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(text)
        if isinstance(default, int) or name in ('seed', 'reduction_dim'):
            return int(float(text)) if 'e' in text.lower() else int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as exc:
        raise ConfigurationError(f"invalid value for '{name}': {raw!r}") from exc
    return text


def parse_config_text(text: str) -> Dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise ConfigurationError(f"line {lineno}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Read a flat key=value config file.

    Raises:
        ConfigurationError: If the file is missing or malformed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    return RunConfig.from_mapping(parse_config_text(path.read_text(encoding='utf-8')))


def parse_address(address: str):
    host, sep, port = address.rpartition(':')
    if not sep or not host or not port.isdigit():
        raise ConfigurationError(f"address must be host:port, got '{address}'")
    return host, int(port)


def derive_seed(master: int, label: str) -> int:
    """64-bit seed for one component: SHA-256 of 'master:label'."""
    digest = hashlib.sha256(f"{master}:{label}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


def make_random(master: Optional[int], label: str) -> random.Random:
    """Big-integer randomness; cryptographic when no master seed is set."""
    if master is None:
        return secrets.SystemRandom()
    return random.Random(derive_seed(master, label))


def make_generator(master: Optional[int], label: str) -> np.random.Generator:
    """Real-valued randomness for blinds, sampling and synthetic data; CSPRNG-seeded when no master seed is set."""
    if master is None:
        return secure_generator()
    return np.random.default_rng(derive_seed(master, label))


def seed_for(master: Optional[int], label: str) -> Optional[int]:
    return None if master is None else derive_seed(master, label)

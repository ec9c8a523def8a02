"""
Exception hierarchy for spamcraft.

Every error raised by the package derives from SpamcraftError and from the
builtin exception it refines, so callers catching ValueError or
RuntimeError keep working.
"""


class SpamcraftError(Exception):
    """Base class for all spamcraft errors."""


class KeyGenerationError(SpamcraftError, RuntimeError):
    """Prime search exhausted or randomness source failed during keygen."""


class CryptoError(SpamcraftError, ValueError):
    """Invalid plaintext, blinding factor or ciphertext for a key."""


class DomainOverflowError(SpamcraftError, OverflowError):
    """A fixed-point value or scale left the usable plaintext domain D."""


class ScaleMismatchError(SpamcraftError, ValueError):
    """Two scaled ciphertexts were combined at different scale exponents."""


class ProtocolStateError(SpamcraftError, RuntimeError):
    """A message arrived out of order; the receiving state is unchanged."""


class ProtocolAbort(SpamcraftError, RuntimeError):
    """A protocol round was abandoned; partial state must be discarded."""


class HandshakeError(ProtocolAbort):
    """The peers disagree on version, key size, scale or dimension."""


class FrameError(SpamcraftError, ValueError):
    """A wire frame is malformed, oversized or carries an unknown type tag."""


class ConfigurationError(SpamcraftError, ValueError):
    """A run configuration is invalid or infeasible for the chosen key."""


class DivergenceError(SpamcraftError, ArithmeticError):
    """Plaintext training produced non-finite weights."""


class CorpusError(SpamcraftError, ValueError):
    """A labeled corpus is missing files or has malformed label lines."""


class ConvergenceError(SpamcraftError, ArithmeticError):
    """An iterative solver did not reach its tolerance within the iteration cap."""


class PeerAbort(ProtocolAbort):
    """The peer sent ABORT; the local side discards its state and sends nothing back."""

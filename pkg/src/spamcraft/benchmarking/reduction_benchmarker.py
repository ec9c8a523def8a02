"""
Reduction benchmarking module.

Times each dimensionality reduction method and the plaintext model it
yields, without running the private protocol.
"""

from typing import Optional

from ..config import RunConfig
from .protocol_benchmarker import ProtocolBenchmarker


class ReductionBenchmarker(ProtocolBenchmarker):
    """Reduction time and plaintext AUC per (method, dimension) cell."""

    def __init__(self, config: Optional[RunConfig] = None, under_test: bool = False):
        super().__init__(config, under_test, name="Reduction Benchmarker", private=False)
        self.supported_metrics = ['reduce_time', 'train_time', 'auc', 'memory']

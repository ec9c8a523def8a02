"""
Protocol benchmarking module.

This module runs grids of (reduction method, reduced dimension, block
size K, key size b) cells. Every cell trains a plaintext model and, unless
disabled, a private model over the training protocol, then scores both
on the held-out split.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import RunConfig, seed_for
from ..learning.dataset import LabeledDataset
from ..learning.logistic import Model, train_batch, train_dense, train_online
from ..learning.metrics import auc, majority_baseline
from ..reduction import BaseReducer, get_reducer
from ..transport.session import run_training_session
from .base_benchmarker import BaseBenchmarker

# Fixed column order of result CSVs
RESULT_COLUMNS = [
    'method', 'dim', 'K', 'b', 'mode', 'rounds',
    'reduce_seconds', 'plain_seconds', 'wall_seconds', 'slowdown',
    'plain_auc', 'auc', 'max_weight_gap', 'majority_baseline',
    'encryptions', 'decryptions', 'reencryptions', 'cipher_operations', 'elements_sent',
    'memory_mb', 'error',
]


@dataclass(frozen=True)
class BenchCell:
    """
    One grid point.

    Attributes:
        method (str, optional): Reduction method; None trains on the input features
        dim (int, optional): Reduced dimension (hash modulus for hashspace)
        block_size (int): Instances per update K
        key_bits (int): Paillier key size b
    """
    method: Optional[str]
    dim: Optional[int]
    block_size: int
    key_bits: int


def expand_grid(methods: Sequence[Optional[str]], dims: Sequence[Optional[int]],
                block_sizes: Sequence[int], key_bits: Sequence[int]) -> List[BenchCell]:
    """Cartesian product of the grid axes; methods without a target dimension get one cell per other axis."""
    cells = []
    for method, dim, k, b in itertools.product(methods, dims, block_sizes, key_bits):
        if method in (None, 'none', 'dfprune'):
            dim = None
        cell = BenchCell(None if method == 'none' else method, dim, k, b)
        if cell not in cells:
            cells.append(cell)
    return cells


class ProtocolBenchmarker(BaseBenchmarker):
    """
    Private-versus-plaintext training benchmarks.

    Args:
        config (RunConfig, optional): Base parameters; each cell overrides K, b and the reduction
        under_test (bool): Lift the insecure-key guard for small grid keys
        name (str): Name written into result headers
        private (bool): Run the private protocol in every binary cell
    """

    columns = RESULT_COLUMNS

    def __init__(self, config: Optional[RunConfig] = None, under_test: bool = False,
                 name: str = "Protocol Benchmarker", private: bool = True):
        super().__init__(
            name=name,
            version="1.0.0",
            supported_metrics=['wall_time', 'auc', 'counters', 'memory', 'slowdown'],
            config=config,
        )
        self.under_test = under_test
        self.private = private
        self.logger = logging.getLogger(__name__)

    def _cell_config(self, cell: BenchCell) -> RunConfig:
        return replace(self.config, block_size=cell.block_size, key_bits=cell.key_bits,
                       reduction=cell.method, reduction_dim=cell.dim)

    def _reduce(self, cell: BenchCell, train: LabeledDataset,
                test: LabeledDataset) -> Tuple[Any, Any, bool]:
        """Fit on the training split only; returns (train, test, private_safe)."""
        if cell.method is None:
            return train, test, True
        reducer: BaseReducer = get_reducer(cell.method, train.dim, cell.dim,
                                           seed=seed_for(self.config.seed, f'reduce-{cell.method}') or 0,
                                           df_threshold=self.config.df_threshold)
        reducer.fit(train)
        return reducer.transform(train), reducer.transform(test), reducer.private_safe

    def _train_plain(self, cfg: RunConfig, train) -> Model:
        if cfg.mode == 'batch':
            return train_batch(train, cfg.eta, cfg.reg_lambda, tol=cfg.tol, max_iters=cfg.rounds)
        blocks = (block for _ in range(cfg.passes) for block in train.blocks(cfg.block_size))
        return train_online(blocks, cfg.eta, cfg.reg_lambda, dim=train.dim)

    def new_row(self, cell: BenchCell, train: LabeledDataset, test: LabeledDataset) -> Dict[str, Any]:
        row: Dict[str, Any] = {column: math.nan for column in RESULT_COLUMNS}
        row.update({'method': cell.method or 'none', 'dim': cell.dim if cell.dim is not None else train.dim,
                    'K': cell.block_size, 'b': cell.key_bits, 'mode': self.config.mode,
                    'majority_baseline': majority_baseline(test.labels)})
        return row

    def run_cell(self, cell: BenchCell, train: LabeledDataset, test: LabeledDataset, row: Dict[str, Any],
                 **kwargs) -> None:
        """
        Reduce, train the plaintext reference, then train privately.

        Args:
            **kwargs: Benchmark options:
                - private (bool): Run the private protocol (default: the benchmarker's setting)
        """
        private = kwargs.get('private', self.private)
        cfg = self._cell_config(cell)

        started = time.perf_counter()
        train_r, test_r, private_safe = self._reduce(cell, train, test)
        row['reduce_seconds'] = time.perf_counter() - started

        started = time.perf_counter()
        if isinstance(train_r, np.ndarray):
            block = None if cfg.mode == 'batch' else cfg.block_size
            plain = train_dense(train_r, train.labels, cfg.eta, cfg.reg_lambda, block,
                                cfg.rounds if cfg.mode == 'batch' else cfg.passes)
            row['plain_seconds'] = time.perf_counter() - started
            row['plain_auc'] = auc(test_r @ plain.w, test.labels)
            row['dim'] = train_r.shape[1]
        else:
            plain = self._train_plain(cfg, train_r)
            row['plain_seconds'] = time.perf_counter() - started
            row['plain_auc'] = auc(plain.scores(test_r), test_r.labels)
            row['dim'] = train_r.dim

        if private and private_safe:
            report = run_training_session(cfg, train_r, under_test=self.under_test)
            row['wall_seconds'] = report.wall_seconds
            row['rounds'] = report.rounds
            row['auc'] = auc(report.model.scores(test_r), test_r.labels)
            row['max_weight_gap'] = float(np.max(np.abs(report.model.w - plain.w))) if plain.dim else 0.0
            row['slowdown'] = report.wall_seconds / max(row['plain_seconds'], 1e-9)
            row.update(report.counters.to_dict())
        elif private:
            self.logger.info(f"{cell.method} output is not binary; private training skipped")

    @staticmethod
    def key_size_slowdown(frame: pd.DataFrame) -> pd.DataFrame:
        """
        Private wall time of every cell relative to the smallest key of its (method, dim, K) group.

        Returns:
            pd.DataFrame: Columns method, dim, K, b, wall_seconds, key_slowdown
        """
        ok = frame[(frame['error'].fillna('') == '') & frame['wall_seconds'].notna()].copy()
        if ok.empty:
            return pd.DataFrame(columns=['method', 'dim', 'K', 'b', 'wall_seconds', 'key_slowdown'])
        base = ok.loc[ok.groupby(['method', 'dim', 'K'])['b'].idxmin(), ['method', 'dim', 'K', 'wall_seconds']]
        base = base.rename(columns={'wall_seconds': 'base_seconds'})
        merged = ok.merge(base, on=['method', 'dim', 'K'])
        merged['key_slowdown'] = merged['wall_seconds'] / merged['base_seconds']
        return merged[['method', 'dim', 'K', 'b', 'wall_seconds', 'key_slowdown']].reset_index(drop=True)

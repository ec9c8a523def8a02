"""
Base benchmarker module.

A benchmarker runs a grid of cells over one train/test split. The base
class owns the grid loop, per-cell failure capture, memory sampling and
the result CSV with its provenance header; subclasses fill in one row
per cell.
"""

from abc import ABC, abstractmethod
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union
import logging
import os

import pandas as pd
import psutil

from ..config import RunConfig
from ..learning.dataset import LabeledDataset


class BaseBenchmarker(ABC):
    """
    Base class for all benchmarkers in spamcraft.

    Attributes:
        name (str): Benchmarker name, written into result headers
        version (str): Version information
        supported_metrics (list): Metrics the rows carry
        config (RunConfig): Base parameters every cell starts from
        columns (Sequence[str]): Fixed column order of the result CSV
        results (List[Dict[str, Any]]): Rows of every cell run so far
    """

    columns: Sequence[str] = ()

    def __init__(self, name: str, version: str, supported_metrics: List[str],
                 config: Optional[RunConfig] = None):
        self.name = name
        self.version = version
        self.supported_metrics = supported_metrics
        self.config = config or RunConfig()
        self.results: List[Dict[str, Any]] = []
        self.logger = logging.getLogger(__name__)

    @abstractmethod
    def new_row(self, cell, train: LabeledDataset, test: LabeledDataset) -> Dict[str, Any]:
        """Row skeleton for a cell, filled before anything can fail."""

    @abstractmethod
    def run_cell(self, cell, train: LabeledDataset, test: LabeledDataset, row: Dict[str, Any],
                 **kwargs) -> None:
        """
        Run one cell and write its measurements into ``row``.

        Args:
            cell: Grid point to run
            train (LabeledDataset): Training documents
            test (LabeledDataset): Held-out documents for AUC
            row (Dict[str, Any]): Row from new_row, updated in place
            **kwargs: Benchmarker-specific options
        """

    def benchmark(self, cell, train: LabeledDataset, test: LabeledDataset, **kwargs) -> Dict[str, Any]:
        """
        Benchmark one grid cell.

        A failing cell still yields a row: its message goes to the 'error'
        column and the measurements it did not reach stay NaN.

        Returns:
            Dict[str, Any]: One result row
        """
        row = self.new_row(cell, train, test)
        row['error'] = ''
        self.logger.info(f"Starting cell {cell}")
        start_memory = self._get_memory_usage()
        try:
            self.run_cell(cell, train, test, row, **kwargs)
            self.logger.info(f"Cell completed: {cell}")
        except Exception as e:
            self.logger.error(f"Cell {cell} failed: {e}")
            row['error'] = str(e)

        end_memory = self._get_memory_usage()
        if start_memory is not None and end_memory is not None:
            row['memory_mb'] = end_memory - start_memory
        self.results.append(row)
        return row

    def run_grid(self, cells: Iterable, train: LabeledDataset, test: LabeledDataset,
                 **kwargs) -> pd.DataFrame:
        """
        Run every cell; failures become rows with an error and the grid continues.

        Raises:
            ValueError: If the grid is empty
        """
        cells = list(cells)
        if not cells:
            raise ValueError("benchmark grid is empty")
        rows = [self.benchmark(cell, train, test, **kwargs) for cell in cells]
        return pd.DataFrame(rows, columns=list(self.columns) or None)

    def save_results(self, frame: pd.DataFrame, output_path: Union[str, Path],
                     extra: Optional[Mapping[str, Any]] = None) -> Path:
        """
        Write a result CSV preceded by '# key=value' provenance lines.

        Args:
            frame (pd.DataFrame): Rows from run_grid
            output_path (Union[str, Path]): Output file path
            extra (Mapping, optional): Further provenance pairs, e.g. the command line

        Returns:
            Path: Path to the saved file
        """
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        header = {'benchmarker': self.name, 'version': self.version,
                  'generated': datetime.now().isoformat()}
        header.update(self.config.describe())
        header.update({k: str(v) for k, v in (extra or {}).items()})

        with open(output_path, 'w', encoding='utf-8', newline='') as f:
            for key, value in header.items():
                f.write(f"# {key}={value}\n")
            frame.to_csv(f, index=False, columns=list(self.columns) or None)

        self.logger.info(f"Results saved to {output_path}")
        return output_path

    def get_benchmarker_info(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'version': self.version,
            'supported_metrics': self.supported_metrics,
            'class': self.__class__.__name__
        }

    def _get_memory_usage(self) -> Optional[float]:
        """Resident memory of this process in MB, or None where psutil cannot read it."""
        try:
            return psutil.Process(os.getpid()).memory_info().rss / (1024 * 1024)
        except Exception:
            return None

"""
Comparison of saved benchmark results.
"""

import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['file', 'method', 'dim', 'K', 'b', 'plain_auc', 'auc', 'plain_seconds',
                   'wall_seconds', 'slowdown', 'error']


def read_results(path: Union[str, Path]) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """
    Read a bench CSV with its '# key=value' provenance header.

    Returns:
        Tuple[pd.DataFrame, Dict[str, str]]: Rows and header pairs
    """
    header = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].strip().partition('=')
            header[key] = value
    frame = pd.read_csv(path, comment='#', keep_default_na=True)
    frame['error'] = frame['error'].fillna('')
    return frame, header


def evaluate_results(results_files: Sequence[Union[str, Path]], visualize: bool = False,
                     output_path: Optional[Union[str, Path]] = None) -> pd.DataFrame:
    """
    Print a side-by-side summary of one or more bench CSVs.

    Args:
        results_files: CSV paths written by a benchmarker
        visualize (bool): Plot AUC per cell (needs the 'plot' extra)
        output_path (optional): Where to save the combined summary as CSV

    Returns:
        pd.DataFrame: The combined summary
    """
    frames: List[pd.DataFrame] = []
    for file in results_files:
        frame, _ = read_results(file)
        frame.insert(0, 'file', os.path.basename(str(file)))
        frames.append(frame)
    if not frames:
        raise ValueError("no result files given")
    df = pd.concat(frames, ignore_index=True)
    df = df[[c for c in SUMMARY_COLUMNS if c in df.columns]]
    print('\n=== Benchmark Comparison ===')
    print(df.to_string(index=False))
    if visualize:
        import matplotlib.pyplot as plt
        labels = df['method'].astype(str) + '/' + df['dim'].astype(str) + '/K=' + df['K'].astype(str)
        df.assign(cell=labels).set_index('cell')[['plain_auc', 'auc']].plot.bar(rot=45)
        plt.title('AUC per benchmark cell')
        plt.ylabel('AUC')
        plt.tight_layout()
        plt.show()
    if output_path:
        df.to_csv(output_path, index=False)
        print(f'\nEvaluation summary saved to {output_path}')
    return df

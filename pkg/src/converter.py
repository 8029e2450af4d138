"""
Thermal Link - Converter Module
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from src.writer import ResultWriter, unlabeled

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = '.manifest.json'
RESULT_SUFFIXES = ('.csv', '.json')


def is_manifest(path: Path) -> bool:
    return path.name.endswith(MANIFEST_SUFFIX)


class ResultConverter:
    """
    Rewrites result tables between CSV (unit headers) and JSON (bare keys).

    Run manifests are never converted; a converted table lands next to its
    source with the same stem.
    """

    def __init__(self, base_dir: str = "output"):
        """
        Args:
            base_dir: Directory searched when no path is given
        """
        self.base_dir = Path(base_dir)

    def result_files(self, path: Optional[str] = None) -> List[Path]:
        """
        Result tables under path (or base_dir); a file path is returned as is.

        Raises:
            FileNotFoundError: If the path does not exist
        """
        root = Path(path) if path else self.base_dir
        if not root.exists():
            raise FileNotFoundError(f"Source directory {root} does not exist")
        if root.is_file():
            return [root]
        return [candidate for candidate in sorted(root.rglob("*"))
                if candidate.is_file() and candidate.suffix.lower() in RESULT_SUFFIXES
                and not is_manifest(candidate)]

    @staticmethod
    def read_table(source: Path) -> pd.DataFrame:
        """
        Load a result table with bare column names and NaN for missing values.

        Raises:
            ValueError: If a JSON file does not hold a list of records
        """
        if source.suffix.lower() == '.csv':
            return unlabeled(pd.read_csv(source, keep_default_na=False, na_values=['nan']))
        with open(source, 'r', encoding='utf-8') as f:
            records = json.load(f)
        if not isinstance(records, list):
            raise ValueError(f"{source.name} does not hold a list of records")
        return pd.DataFrame.from_records(records)

    def convert_file(self, source_path: Path, target_format: str) -> Tuple[bool, str]:
        """
        Convert one result table.

        Args:
            source_path: CSV or JSON result file
            target_format: 'csv' or 'json'

        Returns:
            (success, message) for the status listing
        """
        target = source_path.with_suffix(f'.{target_format}')
        try:
            table = self.read_table(source_path)
            writer = ResultWriter(base_dir=str(target.parent), output_format=target_format)
            written = writer.save_data(table, str(target))
        except (OSError, ValueError) as e:
            logger.debug("conversion of %s failed", source_path, exc_info=True)
            return False, f"Error converting {source_path.name}: {e}"
        return True, f"Successfully converted {source_path.name} to {written}"

    def convert_files(self, target_format: str, path: Optional[str] = None) -> Dict[str, List[str]]:
        """
        Convert every result table under path that is not already in target_format.

        Returns:
            {'success': [...], 'errors': [...]} status messages
        """
        results: Dict[str, List[str]] = {'success': [], 'errors': []}
        try:
            sources = self.result_files(path)
        except FileNotFoundError as e:
            results['errors'].append(f"Error during conversion: {e}")
            return results
        if not sources:
            results['errors'].append(f"No files found to convert in {path or self.base_dir}")
            return results

        pending = [source for source in sources if source.suffix.lower() != f'.{target_format}']
        logger.debug("converting %d of %d result files to %s", len(pending), len(sources), target_format)
        for source in pending:
            success, message = self.convert_file(source, target_format)
            results['success' if success else 'errors'].append(message)
        return results

"""
Thermal Link - CSV and JSON Writing Module
"""
import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from src import __version__
from src.sweep import ResultRecord, records_to_frame

logger = logging.getLogger(__name__)

RATE = 'rate'
TIME = '1/rate'
DIMENSIONLESS = '1'

COLUMN_UNITS = {
    'gamma1': RATE, 'gamma2': RATE, 'kappa': RATE, 'delta1': RATE, 'delta2': RATE,
    'gamma_phi': RATE, 'phi': RATE, 'residual': RATE, 'kappa_max': RATE, 'dephasing': RATE,
    'r0': DIMENSIONLESS, 'k0z1': 'rad', 'k0z2': 'rad',
    't': TIME, 'tau': TIME, 't_peak': TIME, 'dt': TIME,
}
TEXT_COLUMNS = frozenset({'index', 'route', 'seed', 'converged', 'provenance', 'engine_version', 'error',
                          'curve', 'panel', 'regime'})
HEADER_PATTERN = re.compile(r'^(?P<name>.*?) \[(?P<unit>[^\]]*)\]$')


def header_for(column: str) -> str:
    """Column name with its unit, e.g. 'kappa [rate]'; text columns stay bare."""
    if column in TEXT_COLUMNS:
        return column
    return f"{column} [{COLUMN_UNITS.get(column, DIMENSIONLESS)}]"


def column_from_header(header: str) -> str:
    match = HEADER_PATTERN.match(header)
    return match.group('name') if match else header


def labeled(df: pd.DataFrame) -> pd.DataFrame:
    return df.rename(columns={column: header_for(column) for column in df.columns})


def unlabeled(df: pd.DataFrame) -> pd.DataFrame:
    return df.rename(columns={column: column_from_header(column) for column in df.columns})


def frame_to_records(df: pd.DataFrame) -> List[Dict]:
    """JSON-ready records with NaN written as null."""
    clean = df.astype(object).where(pd.notna(df), None)
    return clean.to_dict(orient='records')


class ResultWriter:
    """
    Writer for result tables and run manifests
    """

    FORMATS = ('csv', 'json')
    FLOAT_FORMAT = '%.17g'

    def __init__(self, base_dir: str = "output", output_format: str = "csv"):
        """
        Initialize writer with base output directory and format.

        Args:
            base_dir: Directory for bare file names
            output_format: Output format ('csv' or 'json')
        """
        self.base_dir = Path(base_dir)
        self.output_format = output_format.lower()
        if self.output_format not in self.FORMATS:
            raise ValueError("Output format must be 'csv' or 'json'")

    def create_output_dir(self, subdir: str = '') -> Path:
        """
        Create base_dir/subdir if it doesn't exist.

        Returns:
            Path of the directory
        """
        target = self.base_dir / subdir if subdir else self.base_dir
        target.mkdir(parents=True, exist_ok=True)
        return target

    def resolve_path(self, target: str) -> Path:
        """
        Bare names land in base_dir; the suffix follows the output format.
        """
        path = Path(target)
        if not path.is_absolute() and len(path.parts) == 1:
            path = self.create_output_dir() / path
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
        return path.with_suffix(f'.{self.output_format}')

    def save_data(self, df: pd.DataFrame, target: str) -> str:
        """
        Save a DataFrame in the writer's format.

        CSV headers carry units and floats keep 17 significant digits; JSON
        keys are the bare column names.

        Args:
            df: Table to save
            target: File name or path

        Returns:
            Path to saved file

        Raises:
            AttributeError: If df is not a pandas DataFrame
        """
        if not isinstance(df, pd.DataFrame):
            raise AttributeError("Data must be a pandas DataFrame")
        filepath = self.resolve_path(target)

        if self.output_format == 'json':
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(frame_to_records(df), f, indent=4)
        else:
            df = df.copy()
            if 'error' in df.columns:
                df['error'] = df['error'].fillna('')
            labeled(df).to_csv(filepath, index=False, float_format=self.FLOAT_FORMAT, na_rep='nan')
        logger.debug("wrote %d rows to %s", len(df), filepath)
        return str(filepath)

    def save_records(self, records: List[ResultRecord], target: str, manifest: Optional[Dict] = None) -> str:
        """
        Save sweep records and, if given, a JSON manifest next to them.

        Returns:
            Path to the results file
        """
        filepath = self.save_data(records_to_frame(records), target)
        if manifest is not None:
            self.write_manifest(filepath, manifest)
        return filepath

    def write_manifest(self, results_path: str, metadata: Dict) -> str:
        """
        Provenance of a results file: engine version, timestamp, config.
        """
        manifest_path = Path(results_path).with_suffix('.manifest.json')
        content = {'engine_version': __version__, 'results': Path(results_path).name}
        content.update(metadata)
        with open(manifest_path, 'w', encoding='utf-8') as f:
            json.dump(content, f, indent=4, default=str)
        return str(manifest_path)

    def save_bundle(self, name: str, panels: Dict[str, pd.DataFrame], metadata: Dict) -> Dict[str, str]:
        """
        Write each panel of a figure bundle to base_dir/name/<panel> plus one manifest.

        Returns:
            Mapping panel -> file path, with the manifest under 'manifest'
        """
        bundle_dir = self.create_output_dir(name)
        paths = {panel: self.save_data(df, str(bundle_dir / panel)) for panel, df in panels.items()}
        manifest = bundle_dir / f'{name}.manifest.json'
        content = {'engine_version': __version__, 'figure': name, 'panels': sorted(panels)}
        content.update(metadata)
        with open(manifest, 'w', encoding='utf-8') as f:
            json.dump(content, f, indent=4, default=str)
        paths['manifest'] = str(manifest)
        return paths

"""
CSV report writer for experiment results.

A report is a pandas DataFrame preceded by '#key=value' header lines that echo
the run configuration. Floats are written with 17 significant digits so every
value reparses to the exact double that was written.

If no location is given the file goes to the output directory from Settings
(FEM_OUTPUT_DIR, default output/).
"""

import logging
import os
from pathlib import Path
from typing import Optional

import pandas as pd

from models import RunConfig
from utils.settings import Settings

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class CsvReport:
    """Collects header metadata and one DataFrame, then writes a CSV file."""

    def __init__(self, config: Optional[RunConfig] = None):
        self.header: list[tuple[str, str]] = []
        self.frame: Optional[pd.DataFrame] = None
        if config is not None:
            self.header.extend(config.header_items())

    def add_header(self, key: str, value) -> None:
        if "\n" in str(key) or "\n" in str(value) or "=" in str(key):
            raise ValueError(f"Header entry {key!r} cannot contain newlines or '='")
        self.header.append((key, "" if value is None else str(value)))

    def set_frame(self, df: pd.DataFrame, transform_fn=None) -> None:
        """
        Attach the table to write.

        :param df: The dataframe to save
        :param transform_fn: Optional callable applied to df before saving
        """
        self.frame = transform_fn(df) if transform_fn else df

    def save(self, filename: str, location: Optional[str] = None) -> Path:
        """
        Write the report. filename may be absolute, in which case location is
        ignored; otherwise it is placed under location or the output directory.
        """
        if self.frame is None:
            raise ValueError("No table attached to the report")
        path = Path(filename)
        if not path.is_absolute():
            base = Path(location) if location else self.__create_output_dir()
            path = base / path
        if path.suffix != ".csv":
            raise ValueError(f"The file extension of {path.name!r} is not '.csv'")
        path.parent.mkdir(parents=True, exist_ok=True)

        with open(path, "w", newline="") as f:
            for key, value in self.header:
                f.write(f"#{key}={value}\n")
            self.frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

        logger.info(f"Saved report with {len(self.frame)} rows to {path}")
        return path

    def __create_output_dir(self) -> Path:
        out = Path(Settings.OUTPUT_DIR)
        os.makedirs(out, exist_ok=True)
        return out.resolve()


def read_report(path) -> tuple[dict, pd.DataFrame]:
    """Header dict and table of a report written by CsvReport."""
    header = {}
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].rstrip("\n").partition("=")
            header[key] = value
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    return header, frame

"""
CSV Fingerprint Store
Persists the fingerprint table (X, Y, AP1..APn, all float, none nullable) as a CSV file
"""

import math
import os
import threading
from pathlib import Path
from typing import IO, List, Optional, Sequence, Union

import pandas as pd

from ips.base import BaseFingerprintStore
from ips.errors import NullViolationError, ParseError, SchemaError, ShapeError, StorageError
from schemas.positioning_schema import (
    RSS_CEILING_DBM, RSS_FLOOR_DBM, Fingerprint, FingerprintRecord
)

Source = Union[str, Path, IO[str]]

DEFAULT_AP_COUNT = 5


def write_frame(frame: pd.DataFrame, destination: Source) -> None:
    """
    Write a frame as UTF-8 CSV with LF line endings, creating parent directories for paths
    """
    if isinstance(destination, (str, Path)):
        directory = os.path.dirname(str(destination))
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(destination, "w", encoding="utf-8", newline="") as f:
            frame.to_csv(f, index=False, lineterminator="\n")
    else:
        frame.to_csv(destination, index=False, lineterminator="\n")


def store_header(ap_count: int) -> List[str]:
    return ["X", "Y"] + [f"AP{i}" for i in range(1, ap_count + 1)]


def records_to_fingerprints(records: Sequence[FingerprintRecord]) -> List[Fingerprint]:
    return [record.to_fingerprint() for record in records]


def fingerprints_to_records(fingerprints: Sequence[Fingerprint]) -> List[FingerprintRecord]:
    return [FingerprintRecord.from_fingerprint(f) for f in fingerprints]


class CsvFingerprintStore(BaseFingerprintStore):
    """
    CSV implementation of BaseFingerprintStore
    UTF-8, LF line endings, '.' decimal separator, floats written with repr
    """

    def __init__(self, location: Source, ap_count: Optional[int] = None):
        super().__init__(location)
        self.ap_count = ap_count
        self._write_lock = threading.Lock()

    def exists(self) -> bool:
        if isinstance(self.location, (str, Path)):
            return os.path.exists(self.location)
        return True

    def save(self, records: List[FingerprintRecord]) -> None:
        """
        Write the header and one row per record
        """
        records = list(records)
        widths = {len(r.ap_rss) for r in records}
        if len(widths) > 1:
            raise ShapeError(f"ragged fingerprint table: AP widths {sorted(widths)}")
        width = widths.pop() if widths else (self.ap_count or DEFAULT_AP_COUNT)
        if self.ap_count is not None and width != self.ap_count:
            raise ShapeError(f"store holds {self.ap_count} APs, records have {width}")

        header = store_header(width)
        rows = [[repr(float(r.x)), repr(float(r.y))] + [repr(float(v)) for v in r.ap_rss] for r in records]
        frame = pd.DataFrame(rows, columns=header)

        with self._write_lock:
            try:
                write_frame(frame, self.location)
            except OSError as e:
                self.logger.error(f"Failed to save fingerprint store {self.location}: {e}")
                raise StorageError(f"cannot write {self.location}: {e}") from e

        self.ap_count = width
        self.logger.info(f"Saved {len(records)} fingerprint records ({width} APs) to {self.location}")

    def load(self) -> List[FingerprintRecord]:
        """
        Parse and validate every row; RSS values are clamped to [-120, 0] dBm
        """
        try:
            frame = pd.read_csv(
                self.location, dtype=str, keep_default_na=False, index_col=False, encoding="utf-8"
            )
        except FileNotFoundError as e:
            raise StorageError(f"fingerprint store not found: {self.location}") from e
        except pd.errors.EmptyDataError as e:
            raise SchemaError(f"{self.location} has no header row") from e
        except pd.errors.ParserError as e:
            raise SchemaError(f"{self.location} has rows wider than its header: {e}") from e
        except OSError as e:
            raise StorageError(f"cannot read {self.location}: {e}") from e

        columns = [str(c).strip() for c in frame.columns]
        ap_columns = [c for c in columns if c.upper().startswith("AP")]
        expected = store_header(len(ap_columns))
        if len(ap_columns) == 0 or [c.upper() for c in columns] != expected:
            raise SchemaError(f"expected header {','.join(expected)}, found {','.join(columns)}")
        width = len(ap_columns)
        if self.ap_count is not None and width != self.ap_count:
            raise SchemaError(f"store expects {self.ap_count} AP columns, file has {width}")

        records = []
        clamped = 0
        for row_number, row in enumerate(frame.itertuples(index=False), start=2):
            values = []
            for column, cell in zip(expected, row):
                if not isinstance(cell, str):
                    raise SchemaError(f"line {row_number}: missing '{column}' column")
                text = cell.strip()
                if text == "":
                    raise NullViolationError(f"line {row_number}: '{column}' must not be empty")
                try:
                    value = float(text)
                except ValueError as e:
                    raise ParseError(f"line {row_number}: '{column}' is not numeric: {text!r}") from e
                if not math.isfinite(value):
                    raise ParseError(f"line {row_number}: '{column}' is not finite: {text!r}")
                values.append(value)
            rss = values[2:]
            clamped += sum(1 for v in rss if v < RSS_FLOOR_DBM or v > RSS_CEILING_DBM)
            records.append(FingerprintRecord(x=values[0], y=values[1], ap_rss=rss))

        if clamped:
            self.logger.warning(f"Clamped {clamped} RSS values into [{RSS_FLOOR_DBM}, {RSS_CEILING_DBM}] dBm")
        self.ap_count = width
        self.logger.info(f"Loaded {len(records)} fingerprint records ({width} APs) from {self.location}")
        return records


def save_store(records: Sequence[FingerprintRecord], destination: Source) -> None:
    CsvFingerprintStore(destination).save(list(records))


def load_store(source: Source) -> List[FingerprintRecord]:
    return CsvFingerprintStore(source).load()

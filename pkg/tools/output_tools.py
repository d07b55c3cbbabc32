"""
Output Tools
Atomic CSV and JSON writers with run metadata headers
"""
import csv
import hashlib
import io
import json
import os
import tempfile
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from phasespace import __version__


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


class OutputTools:
    """Writers for result files; every file is written to a temporary sibling and renamed into place"""

    @staticmethod
    def config_hash(config: Optional[Dict]) -> str:
        """First 16 hex digits of the SHA-256 of the canonical JSON of a config"""
        canonical = json.dumps(_jsonable(config or {}), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @staticmethod
    def metadata(seed: Optional[int] = None, config: Optional[Dict] = None, **extra) -> Dict:
        """
        Metadata carried by every output

        Args:
            seed: Master seed of the run (None for deterministic commands)
            config: Configuration the run was built from
            extra: Additional key/value pairs
        """
        return {"version": __version__, "seed": seed, "config_hash": OutputTools.config_hash(config), **extra}

    @staticmethod
    def atomic_write(path: str, text: str) -> str:
        """Write text to path atomically; returns the absolute path"""
        path = os.path.abspath(path)
        directory = os.path.dirname(path)
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        return path

    @staticmethod
    def write_csv(path: str, header: Sequence[str], rows, meta: Optional[Dict] = None) -> str:
        """
        Write a CSV file preceded by '# key: value' metadata lines

        Args:
            path: Destination
            header: Column names
            rows: Iterable of rows (or a 2-D array)
            meta: Metadata dictionary, usually from OutputTools.metadata
        """
        buf = io.StringIO()
        for key, value in (meta or {}).items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row of length {len(row)} does not match {len(header)} columns")
            writer.writerow([_format(v) for v in row])
        return OutputTools.atomic_write(path, buf.getvalue())

    @staticmethod
    def write_json(path: str, payload: Dict, meta: Optional[Dict] = None) -> str:
        """Write a JSON document with a top-level meta object"""
        document = {**_jsonable(payload), "meta": _jsonable(meta or {})}
        return OutputTools.atomic_write(path, json.dumps(document, indent=2, sort_keys=True) + "\n")

    @staticmethod
    def read_csv(path: str) -> Tuple[Dict[str, str], List[str], List[List[str]]]:
        """
        Read a file written by write_csv

        Returns:
            (metadata, header, rows) with all values as strings
        """
        meta: Dict[str, str] = {}
        lines = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition(":")
                    meta[key.strip()] = value.strip()
                else:
                    lines.append(line)
        reader = csv.reader(lines)
        header = next(reader)
        return meta, header, [row for row in reader]

    @staticmethod
    def read_json(path: str) -> Dict:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    @staticmethod
    def sidecar_path(csv_path: str) -> str:
        """samples.csv -> samples.json"""
        root, _ = os.path.splitext(csv_path)
        return root + ".json"

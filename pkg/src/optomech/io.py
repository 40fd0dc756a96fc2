"""File formats: versioned spectrum CSVs, two-channel records, fringe sweeps, JSON.

Every CSV starts with a schema line ``# schema: <name>/<version>``, followed by a
header row whose column names carry their units.  Readers refuse a different
schema name or version.

Two-channel records come as CSV (``t_s, ch1_V, ch2_V``) or as a binary file:
the 16-byte magic ``b"OPTOMECH2CHv001\\n"`` followed by little-endian float64
triples ``(t_s, ch1_V, ch2_V)`` interleaved sample by sample.

All writes go to a temporary file in the destination directory and are then
renamed into place, so readers never see a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .delayline import FringeCalibration, FringeSweep
from .spectral import TimeSeries

SPECTRA_SCHEMA = "optomech.spectra/1"
RECORD_SCHEMA = "optomech.two_channel/1"
FRINGE_SCHEMA = "optomech.fringe_sweep/1"
RECORD_COLUMNS = ("t_s", "ch1_V", "ch2_V")
FRINGE_COLUMNS = ("drive", "volts_V")
BINARY_MAGIC = b"OPTOMECH2CHv001\n"
_FLOAT = "%.17g"


class SchemaError(ValueError):
    pass


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a same-directory temp file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(obj):
    """Deterministic JSON: sorted keys, NaN/inf mapped to null, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    return atomic_write(path, dumps_json(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _csv_text(schema, columns, rows):
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_FLOAT % v for v in row])
    return buf.getvalue()


def _read_csv(path, schema, columns=None):
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema:"):
            raise SchemaError(f"{path}: missing schema line, expected '# schema: {schema}'")
        found = first.split(":", 1)[1].strip()
        if found != schema:
            raise SchemaError(f"{path}: schema {found!r} does not match expected {schema!r}")
        reader = csv.reader(fh)
        header = next(reader)
        if columns is not None and tuple(header) != tuple(columns):
            raise SchemaError(f"{path}: columns {header} do not match {list(columns)}")
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    return header, data.reshape(-1, len(header))


def write_spectra_csv(path, columns, schema=SPECTRA_SCHEMA):
    """Write a column dict ``{name: array}`` as a versioned spectra CSV."""
    names = list(columns)
    rows = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    return atomic_write(path, _csv_text(schema, names, rows))


def read_spectra_csv(path, schema=SPECTRA_SCHEMA):
    header, data = _read_csv(path, schema)
    return {name: data[:, i] for i, name in enumerate(header)}


# two-channel records -----------------------------------------------------

def _time_axis(ch1, ch2):
    if ch1.sample_rate != ch2.sample_rate or len(ch1) != len(ch2):
        raise ValueError("channels must share sample rate and length")
    return np.arange(len(ch1)) / ch1.sample_rate


def write_record_csv(path, ch1, ch2):
    t = _time_axis(ch1, ch2)
    return atomic_write(path, _csv_text(RECORD_SCHEMA, RECORD_COLUMNS,
                                        np.column_stack([t, ch1.samples, ch2.samples])))


def write_record_binary(path, ch1, ch2):
    t = _time_axis(ch1, ch2)
    body = np.column_stack([t, ch1.samples, ch2.samples]).astype("<f8").tobytes()
    return atomic_write(path, BINARY_MAGIC + body)


def _record_from_columns(t, ch1, ch2, path):
    if t.size < 2:
        raise ValueError(f"{path}: a record needs at least two samples")
    dt = np.diff(t)
    if not np.all(dt > 0) or not np.allclose(dt, dt[0], rtol=1e-6, atol=0):
        raise ValueError(f"{path}: t_s must be uniformly increasing")
    fs = 1.0 / float(np.mean(dt))
    return TimeSeries(ch1, fs, "ch1"), TimeSeries(ch2, fs, "ch2")


def read_record(path):
    """Read a two-channel record in either format, detected from the first bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
    if head == BINARY_MAGIC:
        raw = np.fromfile(path, dtype="<f8", offset=len(BINARY_MAGIC))
        if raw.size % 3:
            raise SchemaError(f"{path}: binary body is not a whole number of triples")
        raw = raw.reshape(-1, 3)
    elif head.startswith(b"OPTOMECH"):
        raise SchemaError(f"{path}: unsupported binary version {head!r}")
    else:
        _, raw = _read_csv(path, RECORD_SCHEMA, RECORD_COLUMNS)
    return _record_from_columns(raw[:, 0], raw[:, 1], raw[:, 2], path)


# fringe sweeps and calibrations ------------------------------------------

def write_fringe_sweep(path, sweep):
    return atomic_write(path, _csv_text(FRINGE_SCHEMA, FRINGE_COLUMNS,
                                        np.column_stack([sweep.drive, sweep.volts])))


def read_fringe_sweep(path):
    _, data = _read_csv(path, FRINGE_SCHEMA, FRINGE_COLUMNS)
    return FringeSweep(data[:, 0], data[:, 1])


def read_calibration(path):
    d = read_json(path)
    return FringeCalibration(d["A"], d["B"], d["tau_s"], d["V_L"])

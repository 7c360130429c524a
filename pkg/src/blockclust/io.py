"""Matrix files: numeric CSV and a small binary format.

Binary layout: a little-endian uint32 header length, a UTF-8 JSON header
``{"n": .., "p": .., "p1": .., "p2": ..}`` (grid keys optional) and then the
``n * p`` values as little-endian float64 in row-major order.
"""

import csv
import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from ._validation import check_grid_shape
from .exceptions import ConfigurationError, ParseError

NAN_POLICIES = ("reject", "zero", "column-mean")
_NA_TOKENS = {"", "na", "nan", "n/a", "null", "none"}


@dataclass
class DataMatrix:
    values: np.ndarray
    grid_shape: tuple = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ConfigurationError("data must be a 2-D matrix")
        if self.grid_shape is not None:
            self.grid_shape = check_grid_shape(self.grid_shape, self.values.shape[1])

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


def _read_csv(path):
    rows = []
    width = None
    missing = []
    with open(path, newline="") as fh:
        for r, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ParseError(f"expected {width} fields, found {len(rec)}", row=r)
            vals = []
            for c, cell in enumerate(rec, start=1):
                tok = cell.strip()
                if tok.lower() in _NA_TOKENS:
                    vals.append(math.nan)
                    missing.append((len(rows) + 1, c))
                    continue
                try:
                    v = float(tok)
                except ValueError:
                    raise ParseError(f"non-numeric cell {tok!r}", row=r, col=c) from None
                if math.isnan(v):
                    missing.append((len(rows) + 1, c))
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError("file contains no data")
    return np.array(rows, dtype=np.float64), missing


def _apply_nan_policy(X, missing, policy):
    if not missing:
        return X
    if policy == "reject":
        r, c = missing[0]
        raise ParseError("missing value", row=r, col=c)
    if policy == "zero":
        return np.nan_to_num(X, nan=0.0)
    with np.errstate(invalid="ignore"):
        means = np.nanmean(X, axis=0)
    if np.isnan(means).any():
        c = int(np.flatnonzero(np.isnan(means))[0]) + 1
        raise ParseError("column has no observed values", col=c)
    idx = np.isnan(X)
    X = X.copy()
    X[idx] = np.take(means, np.nonzero(idx)[1])
    return X


def _read_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ParseError("binary file too short for a header")
    (hlen,) = struct.unpack("<I", raw[:4])
    try:
        header = json.loads(raw[4: 4 + hlen].decode("utf-8"))
        n, p = int(header["n"]), int(header["p"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"bad binary header: {exc}") from None
    body = raw[4 + hlen:]
    if len(body) != 8 * n * p:
        raise ParseError(f"header declares {n}x{p} values but payload holds {len(body) // 8}")
    X = np.frombuffer(body, dtype="<f8").reshape(n, p).astype(np.float64)
    shape = (header["p1"], header["p2"]) if "p1" in header else None
    missing = [tuple(int(v) + 1 for v in rc) for rc in np.argwhere(np.isnan(X))]
    return X, missing, shape


def detect_format(path):
    return "binary" if str(path).endswith((".bin", ".f64")) else "csv"


def load_matrix(path, nan_policy="reject", grid_shape=None, fmt=None):
    """Read a matrix (rows are observations) from CSV or the binary format.

    Missing cells are rejected by default with their 1-based row and column;
    ``nan_policy`` may instead fill them with 0 or the column mean.
    """
    if nan_policy not in NAN_POLICIES:
        raise ConfigurationError(f"nan_policy must be one of {NAN_POLICIES}")
    fmt = fmt or detect_format(path)
    if fmt == "binary":
        X, missing, shape = _read_binary(path)
    else:
        X, missing = _read_csv(path)
        shape = None
    X = _apply_nan_policy(X, missing, nan_policy)
    if np.isinf(X).any():
        r, c = np.argwhere(np.isinf(X))[0]
        raise ParseError("infinite value", row=int(r) + 1, col=int(c) + 1)
    return DataMatrix(X, grid_shape if grid_shape is not None else shape)


def save_matrix(data, path, fmt=None):
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    fmt = fmt or detect_format(path)
    X = data.values
    if fmt == "binary":
        header = {"n": data.n, "p": data.p}
        if data.grid_shape is not None and len(data.grid_shape) == 2:
            header["p1"], header["p2"] = data.grid_shape
        hb = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", len(hb)))
            fh.write(hb)
            fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())
    else:
        # repr round-trips float64 exactly and ignores the locale
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in X:
                w.writerow([repr(float(v)) for v in row])


def difference_series(data):
    """Successive differences of a time-ordered panel: ``n`` rows become ``n - 1``."""
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    if data.n < 2:
        raise ConfigurationError("differencing needs at least 2 rows")
    return DataMatrix(np.diff(data.values, axis=0), data.grid_shape)

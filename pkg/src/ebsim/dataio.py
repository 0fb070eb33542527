"""Station dataset files and CSV curve files.

Dataset file, version 1::

    # ebsim-dataset 1
    # station 1
    # N 3
    # M 2
    # angles_deg 0 45
    # T0 1
    # d 2
    # seed 1
    # stream_ids 0 1 3
    # columns n m x t
    1 2 +1 3.1415926535897931e-01
    ...

Header lines come first.  Time tags carry 17 significant digits, which
round-trips every double exactly.  Angles are in degrees.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DataError
from .eprb import StationDataset

FORMAT_VERSION = 1
_MAGIC = "ebsim-dataset"
_REQUIRED = ("station", "N", "M", "angles_deg", "T0", "d", "seed", "stream_ids", "columns")


class DatasetFormatError(DataError):
    def __init__(self, path, line: int | None, msg: str) -> None:
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line


def _fmt(v: float) -> str:
    return repr(float(v))


class DatasetWriter:
    """Write a dataset header, then records chunk by chunk.

    The record count is announced in the header and checked on close.
    """

    def __init__(self, path, like: StationDataset, N: int) -> None:
        self.path = Path(path)
        self.N = int(N)
        self.written = 0
        self._fh = open(self.path, "w", encoding="ascii", newline="\n")
        header = [
            f"# {_MAGIC} {FORMAT_VERSION}",
            f"# station {like.station}",
            f"# N {self.N}",
            f"# M {like.M}",
            "# angles_deg " + " ".join(_fmt(a) for a in like.angles_deg),
            f"# T0 {_fmt(like.T0)}",
            f"# d {_fmt(like.d)}",
            f"# seed {int(like.seed)}",
            "# stream_ids " + " ".join(str(int(s)) for s in like.stream_ids),
            "# columns n m x t",
        ]
        self._fh.write("\n".join(header) + "\n")

    def write(self, ds: StationDataset) -> None:
        lines = [
            f"{n} {m} {'+1' if x > 0 else '-1'} {t:.16e}"
            for n, m, x, t in zip(ds.n.tolist(), ds.m.tolist(), ds.x.tolist(), ds.t.tolist())
        ]
        if lines:
            self._fh.write("\n".join(lines) + "\n")
        self.written += len(lines)

    def close(self) -> None:
        self._fh.close()
        if self.written != self.N:
            raise DataError(f"{self.path}: header announces {self.N} records, wrote {self.written}")

    def __enter__(self) -> "DatasetWriter":
        return self

    def __exit__(self, exc_type, *exc) -> None:
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def write_dataset(path, ds: StationDataset) -> None:
    with DatasetWriter(path, ds, len(ds)) as w:
        w.write(ds)


def _parse_header(path, lines: list[str]) -> dict[str, str]:
    if not lines or not lines[0].startswith("#"):
        raise DatasetFormatError(path, 1, "missing header")
    parts = lines[0][1:].split()
    if len(parts) != 2 or parts[0] != _MAGIC:
        raise DatasetFormatError(path, 1, f"not an {_MAGIC} file")
    if parts[1] != str(FORMAT_VERSION):
        raise DatasetFormatError(path, 1, f"unsupported format version {parts[1]}")
    head = {}
    for line in lines[1:]:
        key, _, value = line[1:].strip().partition(" ")
        head[key] = value.strip()
    missing = [k for k in _REQUIRED if k not in head]
    if missing:
        raise DatasetFormatError(path, None, f"header lacks {', '.join(missing)}")
    return head


def read_dataset(path) -> StationDataset:
    """Read and validate a dataset file; errors carry the line number."""
    path = Path(path)
    with open(path, encoding="ascii") as fh:
        text = fh.read().splitlines()
    n_head = 0
    while n_head < len(text) and text[n_head].startswith("#"):
        n_head += 1
    head = _parse_header(path, text[:n_head])
    try:
        station = int(head["station"])
        N = int(head["N"])
        M = int(head["M"])
        angles = [float(a) for a in head["angles_deg"].split()]
        T0 = float(head["T0"])
        d = float(head["d"])
        seed = int(head["seed"])
        stream_ids = tuple(int(s) for s in head["stream_ids"].split())
    except ValueError as exc:
        raise DatasetFormatError(path, None, f"bad header value: {exc}") from None
    if head["columns"].split() != ["n", "m", "x", "t"]:
        raise DatasetFormatError(path, None, f"unexpected columns {head['columns']!r}")
    if len(angles) != M:
        raise DatasetFormatError(path, None, f"M={M} but {len(angles)} angles")
    if station not in (1, 2) or M < 1 or N < 0 or not T0 > 0:
        raise DatasetFormatError(path, None, "header values out of range")

    ns = np.empty(N, np.int64)
    ms = np.empty(N, np.int64)
    xs = np.empty(N, np.int64)
    ts = np.empty(N, np.float64)
    k = 0
    prev = None
    for lineno, line in enumerate(text[n_head:], start=n_head + 1):
        if not line.strip():
            continue
        f = line.split()
        if len(f) != 4:
            raise DatasetFormatError(path, lineno, f"expected 4 fields, got {len(f)}")
        try:
            n, m, x, t = int(f[0]), int(f[1]), int(f[2]), float(f[3])
        except ValueError:
            raise DatasetFormatError(path, lineno, f"unparsable record {line!r}") from None
        if x not in (1, -1):
            raise DatasetFormatError(path, lineno, f"outcome must be +1 or -1, got {f[2]}")
        if not 1 <= m <= M:
            raise DatasetFormatError(path, lineno, f"setting index {m} outside 1..{M}")
        if not (math.isfinite(t) and 0.0 <= t <= T0):
            raise DatasetFormatError(path, lineno, f"time tag {f[3]} outside [0, {T0!r}]")
        if prev is not None and n <= prev:
            raise DatasetFormatError(path, lineno, "event indices must increase")
        if k >= N:
            raise DatasetFormatError(path, lineno, f"more records than announced N={N}")
        ns[k], ms[k], xs[k], ts[k] = n, m, x, t
        prev = n
        k += 1
    if k != N:
        raise DatasetFormatError(path, None, f"header announces N={N} records, found {k}")
    return StationDataset(
        station, tuple(angles), n=ns, m=ms, x=xs, t=ts,
        T0=T0, d=d, seed=seed, stream_ids=stream_ids,
    )


def config_digest(meta: dict[str, Any]) -> str:
    blob = json.dumps(meta, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def format_curve(
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: dict[str, Any] | None = None,
) -> str:
    """CSV text with a commented header carrying the config and its digest."""
    rows = [list(r) for r in rows]
    if not rows:
        raise ValueError("a curve needs at least one row")
    meta = dict(meta or {})
    buf = io.StringIO()
    buf.write(f"# config_digest {config_digest(meta)}\n")
    buf.write(f"# config {json.dumps(meta, sort_keys=True, default=str)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def emit_curve(
    path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: dict[str, Any] | None = None,
) -> Path:
    """Write :func:`format_curve` output to ``path``."""
    text = format_curve(columns, rows, meta)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def read_curve(path) -> tuple[dict[str, Any], list[dict[str, str]]]:
    """Inverse of :func:`emit_curve` (values stay strings)."""
    meta: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# config "):
            meta = json.loads(line[len("# config ") :])
        elif not line.startswith("#"):
            body.append(line)
    return meta, list(csv.DictReader(body))

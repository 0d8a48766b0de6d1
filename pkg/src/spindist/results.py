"""Result rows, parameter digests, and atomic table/summary writers.

Every experiment emits ResultRow records with a fixed column order, written
as comma-separated values plus one JSON summary per run. Writes go through a
temporary file and an atomic rename so concurrent experiments never see a
half-written table.
"""

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

COLUMNS = ("experiment", "quantity", "digest", "value", "se", "bias",
           "n_samples", "seed", "passed", "wall_time")


def params_digest(params):
    """Stable short hash of a parameter mapping.

    Canonicalization: keys sorted, floats via repr (shortest round-trip
    form), nested mappings/sequences allowed. Identical across platforms.
    """
    def canon(x):
        if isinstance(x, dict):
            return {str(k): canon(x[k]) for k in sorted(x, key=str)}
        if isinstance(x, (list, tuple)):
            return [canon(v) for v in x]
        if isinstance(x, float):
            return repr(x)
        if isinstance(x, (str, int, bool)) or x is None:
            return x
        return repr(x)

    blob = json.dumps(canon(params), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class ResultRow:
    experiment: str
    quantity: str
    digest: str
    value: float
    se: float = 0.0
    bias: float = 0.0
    n_samples: int = 0
    seed: int = 0
    passed: bool = None
    wall_time: float = 0.0

    def as_record(self):
        rec = []
        for c in COLUMNS:
            v = getattr(self, c)
            if isinstance(v, float):
                v = repr(v)
            elif v is None:
                v = ""
            rec.append(v)
        return rec


def _atomic_write(path, writer):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path, rows):
    """Comma-separated result table with the fixed column header."""
    def go(fh):
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow(r.as_record())
    _atomic_write(path, go)


def write_summary(path, payload):
    _atomic_write(path, lambda fh: json.dump(payload, fh, indent=2, default=str))


def format_rows(rows):
    """Plain-text table for the terminal."""
    lines = []
    for r in rows:
        flag = "" if r.passed is None else ("  PASS" if r.passed else "  FAIL")
        lines.append(f"{r.experiment:12s} {r.quantity:42s} "
                     f"{r.value:+.6g} +- {r.se:.2g}{flag}")
    return "\n".join(lines)


def all_passed(rows):
    return all(r.passed for r in rows if r.passed is not None)

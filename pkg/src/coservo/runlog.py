"""Line-delimited run logs.

One JSON object per line: a schema-versioned header, one record per
simulation step, and a final summary line. Serialization is canonical
(sorted keys, no whitespace, repr-roundtrip floats), so identical runs
produce byte-identical files.
"""

import json

import numpy as np

SCHEMA = "coservo.runlog/1"


class RunLogError(ValueError):
    pass


def _plain(value):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def dumps_line(obj):
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


class RunLogWriter:
    """Streams header, step records, and a summary to a line-delimited file."""

    def __init__(self, fh, header):
        self._fh = fh
        self._wrote_summary = False
        payload = dict(header)
        payload["schema"] = SCHEMA
        self._fh.write(dumps_line(payload) + "\n")

    def record(self, rec):
        if self._wrote_summary:
            raise RunLogError("log already finalized")
        self._fh.write(dumps_line(rec) + "\n")

    def summary(self, summ):
        if self._wrote_summary:
            raise RunLogError("log already finalized")
        self._fh.write(dumps_line({"summary": summ}) + "\n")
        self._wrote_summary = True


def write_runlog(path, header, records, summary):
    with open(path, "w") as fh:
        w = RunLogWriter(fh, header)
        for rec in records:
            w.record(rec)
        w.summary(summary)


def read_runlog(path):
    """Returns (header, records, summary); validates schema and t ordering."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines:
        raise RunLogError("empty log")
    header = lines[0]
    if header.get("schema") != SCHEMA:
        raise RunLogError(f"unsupported log schema {header.get('schema')!r}")
    if "summary" not in lines[-1]:
        raise RunLogError("log missing summary line (truncated run?)")
    records = lines[1:-1]
    t_prev = -np.inf
    for rec in records:
        if rec["t"] <= t_prev:
            raise RunLogError("record timestamps must strictly increase")
        t_prev = rec["t"]
    return header, records, lines[-1]["summary"]

"""CSV/JSON emitters and run manifests.

Output is a pure function of the parameters: floats are written with 17
significant digits (CSV) or their shortest round-trip repr (JSON), and the
manifest carries no wall-clock time unless one is asked for.
"""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone

from . import __version__

SCHEMA_VERSION = 1


def clean(value):
    """Make a value JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if hasattr(value, "item") and not isinstance(value, (list, dict)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    return value


def format_cell(value):
    value = clean(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def to_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def to_json(obj):
    return json.dumps(clean(obj), indent=2) + "\n"


def manifest(subcommand, params, base_seed=None, outputs=(), stamp=False):
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "params": clean(dict(sorted(params.items()))),
        "version": __version__,
        "base_seed": base_seed,
        "timestamp": datetime.now(timezone.utc).isoformat() if stamp else None,
        "outputs": list(outputs),
    }


def emit(fmt, rows, columns, man, path=None, extra=None):
    """Write rows as CSV or as JSON {"manifest", "records", **extra}.

    With a file path, CSV output gets a sidecar ``<path>.manifest.json``.
    Returns the text written to stdout when path is None.
    """
    if fmt == "json":
        body = {"manifest": man, "records": [{c: r.get(c) for c in columns} for r in rows]}
        body.update(extra or {})
        text = to_json(body)
    else:
        text = to_csv(rows, columns)
    if path is None or path == "-":
        return text
    with open(path, "w", newline="") as fh:
        fh.write(text)
    if fmt == "csv":
        with open(f"{path}.manifest.json", "w") as fh:
            fh.write(to_json(man))
    return None

"""
Export utilities for curve tables, optimum reports and sweep results
CSV carries a '#' metadata preamble; JSON is one {config, columns|axes, data} object
"""

import contextlib
import csv
import json
import math
import sys

import numpy as np

CSV_DIGITS = 9


def format_csv_value(value):
    """Render one cell at CSV precision"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{CSV_DIGITS}g}"
    return str(value)


def flatten_config(config_dict, prefix=""):
    """'section.key = value' lines for the CSV preamble"""
    lines = []
    for key, value in config_dict.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.extend(flatten_config(value, prefix=f"{name}."))
        elif isinstance(value, (list, tuple)):
            lines.append(f"{name} = [{', '.join(format_csv_value(v) for v in value)}]")
        else:
            lines.append(f"{name} = {format_csv_value(value)}")
    return lines


def json_ready(value):
    """Plain-JSON version of nested results: numpy scalars unwrapped, NaN -> null, inf -> 'inf'"""
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_ready(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def write_csv_table(stream, config_dict, columns, rows, extra_meta=None):
    """Preamble, header row and data rows with '\\n' line endings"""
    for line in flatten_config(config_dict):
        stream.write(f"# {line}\n")
    for line in flatten_config(extra_meta or {}):
        stream.write(f"# {line}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_csv_value(v) for v in row])


def write_json_document(stream, document):
    json.dump(json_ready(document), stream, indent=2)
    stream.write("\n")


def frame_rows(frame):
    """DataFrame rows as plain Python lists, column order preserved"""
    return [list(row) for row in frame.itertuples(index=False, name=None)]


@contextlib.contextmanager
def open_sink(path):
    """File at `path`, or stdout when no path is configured"""
    if path is None:
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        yield handle

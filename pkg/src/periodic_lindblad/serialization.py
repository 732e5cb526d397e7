"""Deterministic JSON and CSV output.

Floats are written with 17 significant digits in lowercase scientific
notation, so every value round-trips and identical inputs give identical
bytes.  Complex numbers become ``[re, im]`` pairs and matrices row-major
nested arrays.
"""

import json
import math
from dataclasses import asdict, is_dataclass

import numpy as np


def fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".16e")


def _num(x):
    if math.isfinite(x):
        return fmt(x)
    return json.dumps(fmt(x))  # JSON has no literal for nan/inf


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_num(obj.real)}, {_num(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        if all(isinstance(v, (int, float, complex, np.number)) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    return _encode(obj, indent, 0) + "\n"


def dump(obj, path, indent=2):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(obj, indent))


def decode_matrix(obj):
    """Nested arrays to a complex ndarray; innermost ``[re, im]`` pairs mark complex entries."""
    a = np.asarray(obj, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2:
        return a.astype(complex)
    raise ValueError(f"cannot read a matrix from an array of shape {a.shape}")


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            elif isinstance(v, (complex, np.complexfloating)):
                cells += [fmt(v.real), fmt(v.imag)]
            else:
                cells.append(fmt(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(header, rows))


def complex_header(name, n):
    """Column names ``re_<name>_k, im_<name>_k`` for ``k < n``."""
    out = []
    for k in range(n):
        out += [f"re_{name}_{k}", f"im_{name}_{k}"]
    return out

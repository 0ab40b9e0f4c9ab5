"""Canonical JSON serialization.

Results files and network files must be byte-identical across re-runs with
the same seed, and floating-point payloads must survive a round trip
exactly.  The stdlib ``json`` module cannot customize float formatting, so a
small writer is kept here: keys are emitted sorted, floats are printed with
17 significant digits (enough to reproduce any IEEE-754 double exactly), and
non-finite numbers are rejected.
"""

import json
import math

import numpy as np


def _format_float(x):
    """Render a float with 17 significant digits (exact round trip)."""
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite numbers cannot be serialized: %r" % x)
    return format(x, ".17g")


def _write(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError("object keys must be strings, got %r" % (key,))
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _write(obj.tolist(), out)
    else:
        raise TypeError("cannot serialize %r" % type(obj))


def canonical_dumps(obj):
    """
    Serialize `obj` to a canonical JSON string.

    Keys are sorted, floats carry 17 significant digits, and the output for
    a given value is always the same byte sequence.

    Parameters
    ----------
    obj : dict | list | scalar
        JSON-compatible structure (numpy scalars/arrays accepted).

    Returns
    -------
    str
    """
    out = []
    _write(obj, out)
    return "".join(out)


def canonical_dump(obj, path):
    """Write `canonical_dumps(obj)` plus a trailing newline to `path`."""
    text = canonical_dumps(obj) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text

"""Structured text serialization of results.

Reports are ``name = value`` lines.  Floats are written with ``repr`` (round
trip), vectors as comma-separated values, booleans as ``true``/``false``.
Summary tables round to 6 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import fields, is_dataclass

import numpy as np

__all__ = ["format_value", "format_record", "record_of", "summary_value", "sweep_csv"]


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.ndarray) or isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in np.asarray(v, dtype=object).ravel())
    return str(v)


def format_record(pairs) -> str:
    items = pairs.items() if isinstance(pairs, dict) else pairs
    return "".join(f"{k} = {format_value(v)}\n" for k, v in items)


def record_of(obj, skip=()) -> list[tuple[str, object]]:
    """Scalar and vector fields of a dataclass, in declaration order."""
    if not is_dataclass(obj):
        raise TypeError(f"{type(obj).__name__} is not a dataclass")
    out = []
    for f in fields(obj):
        if f.name in skip:
            continue
        v = getattr(obj, f.name)
        if isinstance(v, (dict,)) or (hasattr(v, "grid") and hasattr(v, "values")):
            continue
        out.append((f.name, v))
    return out


def summary_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.6g}"
    if isinstance(v, (np.ndarray, list, tuple)):
        return "(" + ", ".join(summary_value(x) for x in np.asarray(v, dtype=object).ravel()) + ")"
    return str(v)


def sweep_csv(rows) -> str:
    """One line per solve; probe rows follow their base row with ``probe_of`` set."""
    out = ["row,probe_of,sigma,I,Lambda,converged,frequency_window,in_omega,omega,error"]

    def line(idx, parent, r):
        sig = ";".join(repr(float(s)) for s in r.sigma)
        om = "" if r.omega is None else ";".join(repr(float(w)) for w in r.omega)
        err = (r.error or "").replace(",", ";").replace("\n", " ")
        return ",".join(
            [str(idx), parent, sig, repr(float(r.I)), repr(float(r.Lambda)), format_value(r.converged),
             format_value(r.frequency_window), format_value(r.in_omega), om, err]
        )

    n = 0
    for r in rows:
        base = n
        out.append(line(n, "", r))
        n += 1
        for p in r.probes:
            out.append(line(n, str(base), p))
            n += 1
    return "\n".join(out) + "\n"

"""MPS writer for flattened models."""

from __future__ import annotations

import numpy as np

from .model import FlatMilp


def _num(x: float) -> str:
    return repr(float(x)) if x != int(x) or abs(x) >= 1e15 else str(int(x))


def export_mps(flat: FlatMilp, name: str = "SCOPE") -> str:
    """Render a minimisation model as MPS text.

    Fields are whitespace separated and names can exceed eight characters,
    so readers must accept the free layout.
    """
    A = flat.A.tocsc()
    out = [f"NAME          {name}", "ROWS", " N  COST"]
    senses = []
    for lo, hi in zip(flat.row_lo, flat.row_hi):
        if lo == hi:
            senses.append("E")
        elif np.isfinite(hi):
            senses.append("L")
        else:
            senses.append("G")
    for s, rn in zip(senses, flat.row_names):
        out.append(f" {s}  {rn}")
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, cname in enumerate(flat.names):
        is_int = bool(flat.integer[j])
        if is_int and not in_int:
            out.append(f"    MARKER{marker:04d}  'MARKER'  'INTORG'")
            in_int = True
        elif not is_int and in_int:
            out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")
            marker += 1
            in_int = False
        entries = []
        if flat.c[j] != 0:
            entries.append(("COST", flat.c[j]))
        start, end = A.indptr[j], A.indptr[j + 1]
        for k in range(start, end):
            entries.append((flat.row_names[A.indices[k]], A.data[k]))
        if not entries:
            entries.append(("COST", 0.0))
        for rn, val in entries:
            out.append(f"    {cname}  {rn}  {_num(val)}")
    if in_int:
        out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")
    out.append("RHS")
    for s, rn, lo, hi in zip(senses, flat.row_names, flat.row_lo, flat.row_hi):
        rhs = hi if s in ("E", "L") else lo
        if rhs != 0:
            out.append(f"    RHS  {rn}  {_num(rhs)}")
    out.append("BOUNDS")
    # integer columns default to binary in some readers, so spell the range out
    for j, cname in enumerate(flat.names):
        if flat.integer[j]:
            out.append(f" PL BND  {cname}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"

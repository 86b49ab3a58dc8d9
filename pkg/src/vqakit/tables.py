"""Two-column clip-id/value CSV tables (scores, MOS)."""

from __future__ import annotations

import csv

from .errors import DuplicateId

__all__ = ["read_score_table", "write_score_table"]


def read_score_table(path, value_field: str) -> dict[str, float]:
    """Read a `clip_id,<value_field>` CSV into an ordered id->value map."""
    out: dict[str, float] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header] != ["clip_id", value_field]:
            raise ValueError(f"expected header 'clip_id,{value_field}', got {header}")
        for row in r:
            if not row:
                continue
            cid, val = row[0], float(row[1])
            if cid in out:
                raise DuplicateId(cid)
            out[cid] = val
    return out


def write_score_table(path, values: dict[str, float], value_field: str = "score"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["clip_id", value_field])
        for cid, val in values.items():
            w.writerow([cid, repr(float(val))])

"""Pure-Python GF(2) elimination kernel on int bitsets.

Column ``j`` of a row is bit ``j`` of the int. Bits at positions ``>= ncols``
ride along untouched by pivot selection, which is how callers attach
provenance (an identity block) to rows.
"""

from __future__ import annotations

BACKEND = "python"


def _low(r: int) -> int:
    return (r & -r).bit_length() - 1


def rref(rows: list[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row-echelon form.

    Rows are inserted in order; a row whose lowest live bit is already a pivot
    is reduced by that pivot row. Afterwards pivot rows are back-substituted.
    Returns ``(reduced, pivots)``: the pivot rows sorted by pivot column,
    followed by the rows that reduced to zero (their high bits retained).
    """
    mask = (1 << ncols) - 1
    table: dict[int, int] = {}
    zero_rows = []
    for r in rows:
        live = r & mask
        while live:
            p = _low(live)
            pr = table.get(p)
            if pr is None:
                break
            r ^= pr
            live = r & mask
        if live:
            table[_low(live)] = r
        else:
            zero_rows.append(r)
    pivots = sorted(table)
    for idx in range(len(pivots) - 1, -1, -1):
        p = pivots[idx]
        rp = table[p]
        for q in pivots[:idx]:
            if (table[q] >> p) & 1:
                table[q] ^= rp
    return [table[p] for p in pivots] + zero_rows, pivots


def independent_rows(rows: list[int], ncols: int) -> list[int]:
    """Indices of a maximal independent subset, greedy in row order."""
    mask = (1 << ncols) - 1
    table: dict[int, int] = {}
    keep = []
    for i, r in enumerate(rows):
        r &= mask
        while r:
            p = _low(r)
            pr = table.get(p)
            if pr is None:
                table[p] = r
                keep.append(i)
                break
            r ^= pr
    return keep

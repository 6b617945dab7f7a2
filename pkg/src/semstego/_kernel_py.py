"""Pure-Python interval-walk kernel.

All arithmetic is exact: an interval is (lo, hi, den) with integer
numerators over a shared integer denominator, and comparisons against the
bit stream's dyadic value cross-multiply with shifts.  The compiled
kernel in ``_kernel_cy.pyx`` mirrors this file operation for operation.
"""

from __future__ import annotations

from .errors import CodecError, UnknownClassError

MAX_PEEK_BITS = 4096


def sample_walk(tables, stream, start=None):
    """Descend the tree following the stream's value; stop ends the walk.

    At each step the child intervals partition [lo, hi); bits are peeked
    one at a time until the dyadic uncertainty interval of the peeked
    prefix fits inside a single child.  Consumes exactly the shared-prefix
    length of the final interval from the stream.

    Returns (entity_seq, lo, hi, den, prefix_bits, peeked).
    """
    if start is None:
        start = stream.cursor
    lo, hi, den = 0, 1, 1
    state = ()
    seq = []
    k = 0  # peeked bits
    v = 0  # their integer value
    while True:
        eids, bounds, total = tables.row(state)
        width = hi - lo
        base = lo * total
        new_den = den * total
        nbounds = len(bounds)
        while True:
            # Largest j with (base + width*bounds[j]) / (den*total) <= v / 2^k.
            # Ties resolve to the largest j, which also skips zero-width
            # children sitting exactly at the boundary.
            target = v * new_den
            lo_j, hi_j = 0, nbounds - 1
            while lo_j + 1 < hi_j:
                mid = (lo_j + hi_j) >> 1
                if (base + width * bounds[mid]) << k <= target:
                    lo_j = mid
                else:
                    hi_j = mid
            j = lo_j
            if (v + 1) * new_den <= (base + width * bounds[j + 1]) << k:
                break
            if k >= MAX_PEEK_BITS:
                raise CodecError("stream value sits on an interval boundary")
            v = (v << 1) | stream.bit_at(start + k)
            k += 1
        lo = base + width * bounds[j]
        hi = base + width * bounds[j + 1]
        den = new_den
        if j == len(eids):  # the stop pseudo-child is last
            break
        seq.append(eids[j])
        state = (*state, eids[j])
    prefix = interval_prefix(lo, hi, den)
    stream.consume(len(prefix))
    return seq, lo, hi, den, prefix, k


def replay_walk(tables, seq):
    """Interval of the walk that emits ``seq`` then stops.

    ``seq`` must be the canonical (nondecreasing) entity sequence of a
    supported type; anything else raises UnknownClassError.
    """
    lo, hi, den = 0, 1, 1
    state = ()
    for eid in seq:
        eids, bounds, total = tables.row(state)
        try:
            j = eids.index(eid)
        except ValueError:
            raise UnknownClassError(f"entity {eid} has no mass after prefix {state}") from None
        width = hi - lo
        lo, hi, den = lo * total + width * bounds[j], lo * total + width * bounds[j + 1], den * total
        state = (*state, eid)
    eids, bounds, total = tables.row(state)
    if bounds[-1] == bounds[-2]:
        raise UnknownClassError(f"type {state} has zero stop mass")
    width = hi - lo
    return lo * total + width * bounds[-2], lo * total + width * bounds[-1], den * total


def interval_prefix(lo, hi, den):
    """Longest bit string shared by every real in [lo/den, hi/den).

    Equivalently the longest prefix whose dyadic interval contains the
    whole interval; its length is the number of embedded bits.
    """
    bits = []
    k = 0
    v = 0
    while True:
        mid = ((v << 1) | 1) * den  # boundary (2v+1)/2^(k+1), cross-multiplied
        if hi << (k + 1) <= mid:
            bits.append(0)
            v = v << 1
        elif lo << (k + 1) >= mid:
            bits.append(1)
            v = (v << 1) | 1
        else:
            return bits
        k += 1

# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled interval-walk kernel; mirrors ``_kernel_py`` exactly.

Interval arithmetic stays on Python big integers (exactness is the whole
point); the win over the pure kernel is C-level control flow in the bit
and boundary loops.
"""

from .errors import CodecError, UnknownClassError

DEF _MAX_PEEK_BITS = 4096

MAX_PEEK_BITS = _MAX_PEEK_BITS


def sample_walk(tables, stream, start=None):
    """See ``_kernel_py.sample_walk``; identical contract and results."""
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t lo_j, hi_j, mid, j, nbounds
    if start is None:
        start = stream.cursor
    lo = 0
    hi = 1
    den = 1
    v = 0
    state = ()
    seq = []
    bit_at = stream.bit_at
    row = tables.row
    while True:
        eids, bounds, total = row(state)
        width = hi - lo
        base = lo * total
        new_den = den * total
        nbounds = len(bounds)
        while True:
            target = v * new_den
            lo_j = 0
            hi_j = nbounds - 1
            while lo_j + 1 < hi_j:
                mid = (lo_j + hi_j) >> 1
                if (base + width * bounds[mid]) << k <= target:
                    lo_j = mid
                else:
                    hi_j = mid
            j = lo_j
            if (v + 1) * new_den <= (base + width * bounds[j + 1]) << k:
                break
            if k >= _MAX_PEEK_BITS:
                raise CodecError("stream value sits on an interval boundary")
            v = (v << 1) | bit_at(start + k)
            k += 1
        lo = base + width * bounds[j]
        hi = base + width * bounds[j + 1]
        den = new_den
        if j == len(eids):
            break
        seq.append(eids[j])
        state = state + (eids[j],)
    prefix = interval_prefix(lo, hi, den)
    stream.consume(len(prefix))
    return seq, lo, hi, den, prefix, k


def replay_walk(tables, seq):
    """See ``_kernel_py.replay_walk``."""
    cdef Py_ssize_t j, last
    lo = 0
    hi = 1
    den = 1
    state = ()
    row = tables.row
    for eid in seq:
        eids, bounds, total = row(state)
        try:
            j = eids.index(eid)
        except ValueError:
            raise UnknownClassError(
                f"entity {eid} has no mass after prefix {state}"
            ) from None
        width = hi - lo
        lo, hi, den = (
            lo * total + width * bounds[j],
            lo * total + width * bounds[j + 1],
            den * total,
        )
        state = state + (eid,)
    eids, bounds, total = row(state)
    last = len(bounds) - 1
    if bounds[last] == bounds[last - 1]:
        raise UnknownClassError(f"type {state} has zero stop mass")
    width = hi - lo
    return (
        lo * total + width * bounds[last - 1],
        lo * total + width * bounds[last],
        den * total,
    )


def interval_prefix(lo, hi, den):
    """See ``_kernel_py.interval_prefix``."""
    cdef Py_ssize_t k = 0
    bits = []
    v = 0
    while True:
        mid = ((v << 1) | 1) * den
        if hi << (k + 1) <= mid:
            bits.append(0)
            v = v << 1
        elif lo << (k + 1) >= mid:
            bits.append(1)
            v = (v << 1) | 1
        else:
            return bits
        k += 1

"""Arithmetic coding between bit streams and sentence types.

Sampling walks the entity tree splitting the current probability interval
among candidates (entities in canonical order, stop last) and descends
into the sub-interval containing the stream's value, until stop.  The
embedded bits are the binary prefix shared by the whole final interval,
which is exactly what decoding recovers from the type alone, so encoder
and decoder agree by construction.

Sub-intervals are half-open ``[c, c+p)``: exact rationals make boundary
hits real, and the half-open convention removes the ambiguity.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import kernel
from .bits import BitStream, MaskedBitStream
from .distribution import ClassDistribution, step_weights
from .errors import CodecError, UnknownClassError
from .semantic_space import OntologyTree, SemType

MAX_SENTENCES = 1_000_000


@dataclass(frozen=True)
class Interval:
    """Half-open probability interval [low, high) with exact bounds."""

    low: Fraction
    high: Fraction

    def __post_init__(self):
        if not (0 <= self.low < self.high <= 1):
            raise ValueError(f"invalid interval [{self.low}, {self.high})")

    @property
    def length(self) -> Fraction:
        return self.high - self.low

    def contains(self, value: Fraction) -> bool:
        return self.low <= value < self.high

    def overlaps(self, other: "Interval") -> bool:
        return self.low < other.high and other.low < self.high


@dataclass(frozen=True)
class SampleTrace:
    """One sampled sentence type and its coding bookkeeping."""

    entity_seq: tuple[int, ...]  # canonical nondecreasing
    sem_type: SemType
    interval: Interval
    bits_embedded: int
    embedded_bits: tuple[int, ...]  # the consumed stream prefix
    peeked_bits: int  # bits inspected to settle the walk (>= bits_embedded)


class WalkTables:
    """Memoized integer step tables for one (distribution, tree) pair.

    A state is the nondecreasing entity sequence emitted so far.  Each row
    is (entity_ids, cumulative bounds, total) where entity ``j`` owns
    ``[bounds[j], bounds[j+1])`` and stop owns the last cell.  Rows are
    exact integer weights; normalization is implicit in ``total``.
    """

    def __init__(self, dist: ClassDistribution, tree: OntologyTree):
        self.dist = dist
        self.tree = tree
        self._rows: dict[tuple[int, ...], tuple[tuple[int, ...], tuple[int, ...], int]] = {}

    def row(self, state: tuple[int, ...]):
        cached = self._rows.get(state)
        if cached is not None:
            return cached
        t_pre = SemType((eid, 1) for eid in state)
        last_rank = self.tree.rank(state[-1]) if state else None
        ordered, stop, total = step_weights(self.dist, self.tree, t_pre, last_rank)
        if total == 0:
            from .errors import DeadPrefixError

            raise DeadPrefixError(f"no continuation mass for walk state {state}")
        eids = tuple(eid for eid, _ in ordered)
        bounds = [0]
        for _, w in ordered:
            bounds.append(bounds[-1] + w)
        bounds.append(bounds[-1] + stop)
        result = (eids, tuple(bounds), total)
        self._rows[state] = result
        return result


_tables_cache: "weakref.WeakKeyDictionary[ClassDistribution, weakref.WeakKeyDictionary]" = (
    weakref.WeakKeyDictionary()
)


def get_tables(dist: ClassDistribution, tree: OntologyTree) -> WalkTables:
    per_tree = _tables_cache.get(dist)
    if per_tree is None:
        per_tree = weakref.WeakKeyDictionary()
        _tables_cache[dist] = per_tree
    tables = per_tree.get(tree)
    if tables is None:
        tables = WalkTables(dist, tree)
        per_tree[tree] = tables
    return tables


def canonical_sequence(t: SemType, tree: OntologyTree) -> tuple[int, ...]:
    """The unique nondecreasing entity sequence realizing a type."""
    seq: list[int] = []
    for eid in sorted(t.entity_ids(), key=tree.rank):
        seq.extend([eid] * t.count(eid))
    return tuple(seq)


def _to_interval(lo: int, hi: int, den: int) -> Interval:
    return Interval(Fraction(lo, den), Fraction(hi, den))


def sample_type(
    bits: BitStream | MaskedBitStream,
    dist: ClassDistribution,
    tree: OntologyTree,
) -> SampleTrace:
    """Sample one type from the distribution, driven by the bit stream.

    Consumes exactly ``bits_embedded`` bits (the walk may peek further
    ahead without consuming).  The resulting type always has nonzero
    probability under ``dist``.
    """
    tables = get_tables(dist, tree)
    seq, lo, hi, den, prefix, peeked = kernel.active.sample_walk(tables, bits)
    return SampleTrace(
        entity_seq=tuple(seq),
        sem_type=SemType((eid, 1) for eid in seq),
        interval=_to_interval(lo, hi, den),
        bits_embedded=len(prefix),
        embedded_bits=tuple(prefix),
        peeked_bits=peeked,
    )


def class_interval(dist: ClassDistribution, tree: OntologyTree, t: SemType) -> Interval:
    """The exact interval the sampling walk assigns to a supported type."""
    if dist.count(t) == 0:
        raise UnknownClassError(f"type {tree.describe_type(t)} has zero probability")
    tables = get_tables(dist, tree)
    lo, hi, den = kernel.active.replay_walk(tables, canonical_sequence(t, tree))
    return _to_interval(lo, hi, den)


def decode_type(t: SemType, dist: ClassDistribution, tree: OntologyTree) -> BitStream:
    """Bits recoverable from a type: the shared prefix of its interval.

    This equals the prefix the encoder consumed when it sampled ``t``,
    for every stream whose value falls in the type's interval.
    """
    if dist.count(t) == 0:
        raise UnknownClassError(f"type {tree.describe_type(t)} has zero probability")
    tables = get_tables(dist, tree)
    lo, hi, den = kernel.active.replay_walk(tables, canonical_sequence(t, tree))
    return BitStream(kernel.active.interval_prefix(lo, hi, den))


def embed_message(
    message: BitStream,
    dist: ClassDistribution,
    tree: OntologyTree,
    whiten: Callable[[int], Callable[[int], int]] | None = None,
    max_sentences: int = MAX_SENTENCES,
) -> list[SampleTrace]:
    """Sample types until every explicit message bit is consumed.

    ``whiten(sentence_index)`` supplies a per-sentence XOR mask over the
    remaining stream.  Without whitening, a sentence that embeds zero bits
    would replay identically forever (the per-sentence distribution is
    stationary), so that case raises instead of looping.  The final
    sentence pads with the stream's filler bits.
    """
    traces: list[SampleTrace] = []
    while message.cursor < len(message):
        if len(traces) >= max_sentences:
            raise CodecError(f"message needed more than {max_sentences} sentences")
        index = len(traces)
        view = MaskedBitStream(message, whiten(index)) if whiten else message
        trace = sample_type(view, dist, tree)
        if trace.bits_embedded == 0 and whiten is None:
            raise CodecError(
                "zero-bit sentence under a stationary stream cannot make progress; "
                "supply a whitener"
            )
        traces.append(trace)
    return traces

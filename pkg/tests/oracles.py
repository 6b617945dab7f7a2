"""Independent reference implementations the codec tests check against.

Nothing here calls the production walk or its step tables.  Intervals are
derived from two independently provable facts: a type's interval length
equals its probability, and the walk lays intervals out in depth-first
order with stop after every extension.  Prefixes come from a direct
Fraction-arithmetic containment scan.
"""

from __future__ import annotations

from fractions import Fraction

from semstego.distribution import ClassDistribution
from semstego.semantic_space import OntologyTree, SemType


def dyadic_prefix(low: Fraction, high: Fraction) -> list[int]:
    """Longest bitstring whose dyadic interval contains [low, high)."""
    assert 0 <= low < high <= 1
    bits: list[int] = []
    k = 0
    while True:
        k += 1
        scale = Fraction(1, 2 ** k)
        v = int(low // scale)  # floor(low * 2^k)
        if v * scale <= low and high <= (v + 1) * scale:
            bits = [int(c) for c in format(v, f"0{k}b")]
        else:
            return bits


def layout_key(t: SemType, tree: OntologyTree) -> tuple:
    """Sort key reproducing the walk's depth-first, stop-last layout.

    Extensions of a prefix come before the prefix's own stop, so a
    sequence sorts before its strict prefixes; otherwise order follows
    the first differing entity's canonical rank.
    """
    ranks = []
    for eid in sorted(t.entity_ids(), key=tree.rank):
        ranks.extend([tree.rank(eid)] * t.count(eid))
    return (*ranks, float("inf"))


def reference_intervals(
    dist: ClassDistribution, tree: OntologyTree
) -> list[tuple[SemType, Fraction, Fraction]]:
    """(type, low, high) for every supported type, by first principles."""
    ordered = sorted(dist.support(), key=lambda t: layout_key(t, tree))
    out = []
    cum = Fraction(0)
    for t in ordered:
        p = dist.probability(t)
        out.append((t, cum, cum + p))
        cum += p
    assert cum == 1
    return out


def locate(intervals, value: Fraction):
    """The (type, low, high) triple whose interval contains the value."""
    for t, low, high in intervals:
        if low <= value < high:
            return t, low, high
    raise AssertionError(f"no interval contains {value}")


def stream_value(bits: list[int]) -> Fraction:
    """Dyadic value of a finite bit string (zero-extended tail)."""
    num = 0
    for b in bits:
        num = (num << 1) | b
    return Fraction(num, 2 ** len(bits)) if bits else Fraction(0)

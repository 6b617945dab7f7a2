"""Empirical class distribution and per-step node probabilities.

The distribution maps sentence types to exact rational probabilities
(occurrence counts over a total).  ``assign_probabilities`` produces the
conditional split used at one step of the sampling walk: given the type
prefix accumulated so far, each candidate entity gets the mass of the
supported types still reachable through it, and "stop" gets the mass of
the prefix itself.  Everything is integer/Fraction arithmetic; floats
never touch these code paths.

A type is *reachable* from a prefix when the remaining entities can be
emitted in nondecreasing canonical order, which is exactly what makes each
type correspond to one walk path and the induced distribution equal the
empirical one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DeadPrefixError, DistributionError
from .semantic_space import OntologyTree, SemType, type_len, type_sub

DEFAULT_MAX_TYPE_LEN = 4


class ClassDistribution:
    """Immutable map from SemType to occurrence count."""

    def __init__(self, entries: dict[SemType, int], max_type_len: int):
        if not entries:
            raise DistributionError("empty corpus")
        for t, c in entries.items():
            if c <= 0:
                raise DistributionError(f"non-positive count for {t!r}")
        self._entries = dict(entries)
        self.total = sum(entries.values())
        self.max_type_len = max_type_len
        # (sorted (eid, n) pairs, count lookup, count) per entry, for step scans
        self._flat = tuple(
            (tuple(t.items()), dict(t.items()), c) for t, c in self._entries.items()
        )

    def support(self) -> tuple[SemType, ...]:
        return tuple(self._entries)

    def count(self, t: SemType) -> int:
        return self._entries.get(t, 0)

    def probability(self, t: SemType) -> Fraction:
        return Fraction(self._entries.get(t, 0), self.total)

    def entropy_bits(self) -> float:
        """Shannon entropy of the class distribution, in bits."""
        out = 0.0
        for c in self._entries.values():
            p = c / self.total
            out -= p * math.log2(p)
        return out

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> Iterable[tuple[SemType, int]]:
        return self._entries.items()

    def __repr__(self) -> str:
        return f"ClassDistribution({len(self._entries)} classes, total={self.total})"


def build_distribution(
    records: Sequence[SemType],
    tree: OntologyTree,
    max_type_len: int = DEFAULT_MAX_TYPE_LEN,
) -> ClassDistribution:
    """Count types over the corpus records.

    Records longer than ``max_type_len`` are dropped and the remainder
    renormalized (their counts simply never enter the total).  Every entity
    id must exist in the tree.
    """
    if max_type_len < 0:
        raise DistributionError("max_type_len must be non-negative")
    counts: dict[SemType, int] = {}
    for rec in records:
        for eid, _ in rec.items():
            if eid not in tree:
                raise DistributionError(f"record references unknown entity id {eid}")
        if type_len(rec) > max_type_len:
            continue
        counts[rec] = counts.get(rec, 0) + 1
    if not counts:
        if records:
            raise DistributionError("empty corpus after max_type_len cap")
        raise DistributionError("empty corpus")
    return ClassDistribution(counts, max_type_len)


# -- per-step weights ----------------------------------------------------


def step_weights(
    dist: ClassDistribution,
    tree: OntologyTree,
    t_pre: SemType,
    last_rank: int | None,
) -> tuple[list[tuple[int, int]], int, int]:
    """Integer continuation weights at one walk step.

    Returns (entity weights as (entity_id, weight) in canonical order,
    stop weight, total).  A supported type contributes to the candidate
    through which its canonical completion passes: the minimal remaining
    entity.  Types whose completion would need an entity below
    ``last_rank`` are unreachable from this state and contribute nothing.
    """
    weights: dict[int, int] = {}
    stop = 0
    rank = tree.rank
    for items, lookup, c in dist._flat:
        if any(have > lookup.get(eid, 0) for eid, have in t_pre.items()):
            continue  # t_pre exceeds this type somewhere
        diff = [eid for eid, n in items if t_pre.count(eid) < n]
        if not diff:
            stop += c
            continue
        min_eid = min(diff, key=rank)
        if last_rank is not None and rank(min_eid) < last_rank:
            continue
        weights[min_eid] = weights.get(min_eid, 0) + c
    ordered = sorted(weights.items(), key=lambda kv: rank(kv[0]))
    total = stop + sum(w for _, w in ordered)
    return ordered, stop, total


@dataclass(frozen=True)
class NodeProbabilities:
    """Exact conditional probabilities for one step of the walk.

    ``candidates`` lists (entity_id, probability) in canonical order; the
    stop pseudo-child always comes last.  ``node_probs`` accumulates leaf
    probabilities onto the internal concept and subconcept nodes.
    """

    candidates: tuple[tuple[int, Fraction], ...]
    stop_prob: Fraction
    node_probs: dict[str, Fraction]

    def entity_prob(self, entity_id: int) -> Fraction:
        for eid, p in self.candidates:
            if eid == entity_id:
                return p
        return Fraction(0)

    @property
    def total(self) -> Fraction:
        return self.stop_prob + sum((p for _, p in self.candidates), Fraction(0))


def assign_probabilities(
    tree: OntologyTree,
    dist: ClassDistribution,
    t_pre: SemType,
    last_entity: int | None = None,
) -> NodeProbabilities:
    """Normalized continuation probabilities given a type prefix.

    Raises DeadPrefixError when no supported type continues the prefix
    (possible only for corrupted prefixes, never during sampling).
    """
    last_rank = tree.rank(last_entity) if last_entity is not None else None
    ordered, stop, total = step_weights(dist, tree, t_pre, last_rank)
    if total == 0:
        raise DeadPrefixError(f"no continuation mass for prefix {t_pre!r}")
    candidates = tuple((eid, Fraction(w, total)) for eid, w in ordered)
    node_probs: dict[str, Fraction] = {}
    for eid, p in candidates:
        ent = tree.entity(eid)
        for prefix in (ent.concept, f"{ent.concept}/{ent.subconcept}"):
            node_probs[prefix] = node_probs.get(prefix, Fraction(0)) + p
    return NodeProbabilities(
        candidates=candidates,
        stop_prob=Fraction(stop, total),
        node_probs=node_probs,
    )


# -- serialization -----------------------------------------------------

DIST_FORMAT_VERSION = 1


def distribution_to_dict(dist: ClassDistribution, tree: OntologyTree) -> dict:
    entries = []
    for t, c in sorted(dist.items(), key=lambda kv: tuple(kv[0].items())):
        entries.append({"type": tree.describe_type(t), "count": c})
    return {"version": DIST_FORMAT_VERSION, "total": dist.total, "entries": entries}


def distribution_from_dict(doc: dict, tree: OntologyTree) -> ClassDistribution:
    if not isinstance(doc, dict):
        raise DistributionError("distribution document must be a JSON object")
    if doc.get("version") != DIST_FORMAT_VERSION:
        raise DistributionError(f"unsupported distribution version {doc.get('version')!r}")
    raw = doc.get("entries")
    if not isinstance(raw, list) or not raw:
        raise DistributionError("field 'entries' must be a non-empty list")
    counts: dict[SemType, int] = {}
    max_len = 0
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise DistributionError(f"entries[{i}] must be an object")
        c = entry.get("count")
        if not isinstance(c, int) or c <= 0:
            raise DistributionError(f"entries[{i}].count must be a positive integer")
        type_doc = entry.get("type")
        if not isinstance(type_doc, dict):
            raise DistributionError(f"entries[{i}].type must be an object")
        try:
            t = tree.type_from_paths(type_doc)
        except Exception as exc:
            raise DistributionError(f"entries[{i}].type: {exc}") from exc
        if t in counts:
            raise DistributionError(f"entries[{i}] duplicates type {type_doc!r}")
        counts[t] = c
        max_len = max(max_len, type_len(t))
    total = doc.get("total")
    if total != sum(counts.values()):
        raise DistributionError(
            f"field 'total' ({total!r}) does not match entry counts ({sum(counts.values())})"
        )
    return ClassDistribution(counts, max_type_len=max(max_len, DEFAULT_MAX_TYPE_LEN))


def load_distribution(path, tree: OntologyTree) -> ClassDistribution:
    """Load a distribution file; probabilities reconstructed from counts."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DistributionError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise DistributionError(f"{path}: {exc.strerror}") from exc
    return distribution_from_dict(doc, tree)


def save_distribution(dist: ClassDistribution, tree: OntologyTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(distribution_to_dict(dist, tree), fh, ensure_ascii=False, indent=2)
        fh.write("\n")

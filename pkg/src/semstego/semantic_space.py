"""Entities, the three-level entity tree, and the sentence-type algebra.

A sentence's *type* is the multiset of tree entities it mentions.  Types
support a length, a componentwise partial order, and addition.  The tree
fixes a canonical total order over entities (path string, then id) that
every other module relies on for deterministic walks.

The extractor here is an offline gazetteer: longest-match, left-to-right,
non-overlapping scanning of surface forms over case-folded NFC text, with
matches required to start and end at word boundaries.
"""

from __future__ import annotations

import bisect
import json
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import TreeFormatError

PATH_DEPTH = 3  # concept / subconcept / entity


def _normalize(text: str) -> str:
    """NFC + casefold + collapsed internal whitespace."""
    return " ".join(unicodedata.normalize("NFC", text).casefold().split())


@dataclass(frozen=True)
class Entity:
    """A leaf of the tree: one nameable thing with its surface forms."""

    entity_id: int
    path: str  # "Concept/Subconcept/Name"
    surfaces: tuple[str, ...]  # canonical form first

    @property
    def concept(self) -> str:
        return self.path.split("/", 1)[0]

    @property
    def subconcept(self) -> str:
        return self.path.split("/")[1]

    @property
    def name(self) -> str:
        return self.path.rsplit("/", 1)[1]

    @property
    def canonical_surface(self) -> str:
        return self.surfaces[0]


class SemType:
    """A multiset of entity ids with positive counts.

    Zero counts are never stored; equality and hashing are order-free.
    """

    __slots__ = ("_counts", "_key")

    def __init__(self, counts: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        store: dict[int, int] = {}
        for eid, n in items:
            if n < 0:
                raise ValueError(f"negative count for entity {eid}")
            if n:
                store[eid] = store.get(eid, 0) + n
        self._counts = store
        self._key = tuple(sorted(store.items()))

    @classmethod
    def empty(cls) -> "SemType":
        return cls()

    def count(self, entity_id: int) -> int:
        return self._counts.get(entity_id, 0)

    def items(self) -> Iterator[tuple[int, int]]:
        return iter(self._key)

    def entity_ids(self) -> tuple[int, ...]:
        return tuple(eid for eid, _ in self._key)

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SemType):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        inner = ", ".join(f"{eid}:{n}" for eid, n in self._key)
        return f"SemType({{{inner}}})"


def type_len(t: SemType) -> int:
    """Total number of entity occurrences in the type."""
    return sum(n for _, n in t.items())


def type_leq(a: SemType, b: SemType) -> bool:
    """Componentwise ``<=`` (absent entities count as zero)."""
    return all(n <= b.count(eid) for eid, n in a.items())


def type_add(a: SemType, b: SemType) -> SemType:
    """Componentwise sum, i.e. the type of two sentences concatenated."""
    merged = dict(a.items())
    for eid, n in b.items():
        merged[eid] = merged.get(eid, 0) + n
    return SemType(merged)


def type_sub(a: SemType, b: SemType) -> SemType | None:
    """``a - b`` when ``b <= a``, else None."""
    if not type_leq(b, a):
        return None
    out = dict(a.items())
    for eid, n in b.items():
        rest = out[eid] - n
        if rest:
            out[eid] = rest
        else:
            del out[eid]
    return SemType(out)


class OntologyTree:
    """Immutable three-level entity hierarchy with a canonical leaf order.

    Entities keep their file order as ids; the canonical order sorts by
    path string (then id, which never ties because paths are unique).
    Safe to share across threads once constructed.
    """

    def __init__(self, entities: Iterable[Entity]):
        self._entities = tuple(entities)
        self._validate()
        order = sorted(self._entities, key=lambda e: (e.path, e.entity_id))
        self._canonical = tuple(order)
        self._rank = {e.entity_id: i for i, e in enumerate(order)}
        self._by_id = {e.entity_id: e for e in self._entities}
        self._by_path = {e.path: e for e in self._entities}
        self._matcher: re.Pattern | None = None
        self._surface_owner: dict[str, int] = {}
        self._surface_tokens: frozenset[str] = frozenset()

    def _validate(self) -> None:
        seen_ids: set[int] = set()
        seen_paths: set[str] = set()
        for ent in self._entities:
            if ent.entity_id in seen_ids:
                raise TreeFormatError(f"duplicate entity id {ent.entity_id}")
            seen_ids.add(ent.entity_id)
            parts = ent.path.split("/")
            if len(parts) != PATH_DEPTH or not all(p.strip() for p in parts):
                raise TreeFormatError(
                    f"path {ent.path!r} must have exactly {PATH_DEPTH} non-empty segments"
                )
            if ent.path in seen_paths:
                raise TreeFormatError(f"duplicate path {ent.path!r}")
            seen_paths.add(ent.path)
            if not ent.surfaces or not all(s.strip() for s in ent.surfaces):
                raise TreeFormatError(f"entity {ent.path!r} needs non-empty surface forms")

    # -- lookup ------------------------------------------------------------

    @property
    def entities(self) -> tuple[Entity, ...]:
        return self._entities

    @property
    def canonical_entities(self) -> tuple[Entity, ...]:
        return self._canonical

    def entity(self, entity_id: int) -> Entity:
        return self._by_id[entity_id]

    def entity_by_path(self, path: str) -> Entity:
        try:
            return self._by_path[path]
        except KeyError:
            raise TreeFormatError(f"unknown entity path {path!r}") from None

    def rank(self, entity_id: int) -> int:
        """Position of the entity in canonical order."""
        return self._rank[entity_id]

    def __len__(self) -> int:
        return len(self._entities)

    def __contains__(self, entity_id: int) -> bool:
        return entity_id in self._by_id

    def type_from_paths(self, counts: Mapping[str, int]) -> SemType:
        return SemType({self.entity_by_path(p).entity_id: n for p, n in counts.items()})

    def describe_type(self, t: SemType) -> dict[str, int]:
        return {self.entity(eid).path: n for eid, n in t.items()}

    # -- surface matching ----------------------------------------------

    def _compile_matcher(self) -> None:
        owner: dict[str, int] = {}
        tokens: set[str] = set()
        for ent in self._canonical:  # canonical-first entity wins a shared surface
            for surface in ent.surfaces:
                norm = _normalize(surface)
                if not norm:
                    continue
                owner.setdefault(norm, ent.entity_id)
                tokens.update(norm.split())
        # Longest alternative first, so each scan position takes the
        # longest surface that fits there.
        alts = sorted(owner, key=len, reverse=True)
        pattern = "|".join(re.escape(a) for a in alts)
        self._matcher = re.compile(rf"(?<!\w)(?:{pattern})(?!\w)")
        self._surface_owner = owner
        self._surface_tokens = frozenset(tokens)

    @property
    def surface_tokens(self) -> frozenset[str]:
        """Normalized tokens that occur inside any surface form."""
        if self._matcher is None:
            self._compile_matcher()
        return self._surface_tokens

    def count_entities(self, sentence: str) -> dict[int, int]:
        """Occurrence counts only; the fast path for extraction."""
        if self._matcher is None:
            self._compile_matcher()
        norm = _normalize(sentence)
        counts: dict[int, int] = {}
        if not norm:
            return counts
        owner = self._surface_owner
        for m in self._matcher.finditer(norm):
            eid = owner[m.group(0)]
            counts[eid] = counts.get(eid, 0) + 1
        return counts

    def find_entities(self, sentence: str) -> list[tuple[int, int, int]]:
        """Scan for surface matches.

        Returns (entity_id, start_token, end_token) triples where the token
        span indexes ``sentence.split()`` positions covered by the match.
        """
        if self._matcher is None:
            self._compile_matcher()
        norm = _normalize(sentence)
        if not norm:
            return []
        # After normalization tokens are single-space separated, so a char
        # offset maps to a token index by counting spaces before it.
        starts = []
        pos = 0
        for tok in norm.split(" "):
            starts.append(pos)
            pos += len(tok) + 1
        out = []
        for m in self._matcher.finditer(norm):
            first = bisect.bisect_right(starts, m.start()) - 1
            last = bisect.bisect_left(starts, m.end()) - 1
            out.append((self._surface_owner[m.group(0)], first, last))
        return out


def extract_type(sentence: str, tree: OntologyTree) -> SemType:
    """Multiset of tree entities found in the sentence.

    Deterministic for a fixed tree; a sentence with no entities yields the
    empty type.
    """
    return SemType(tree.count_entities(sentence))


# -- serialization -----------------------------------------------------

TREE_FORMAT_VERSION = 1


def tree_to_dict(tree: OntologyTree) -> dict:
    return {
        "version": TREE_FORMAT_VERSION,
        "nodes": [
            {"path": e.path, "surfaces": list(e.surfaces)} for e in tree.entities
        ],
    }


def tree_from_dict(doc: dict) -> OntologyTree:
    if not isinstance(doc, dict):
        raise TreeFormatError("tree document must be a JSON object")
    if doc.get("version") != TREE_FORMAT_VERSION:
        raise TreeFormatError(f"unsupported tree version {doc.get('version')!r}")
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise TreeFormatError("field 'nodes' must be a non-empty list")
    entities = []
    for i, node in enumerate(nodes):
        if not isinstance(node, dict):
            raise TreeFormatError(f"nodes[{i}] must be an object")
        path = node.get("path")
        surfaces = node.get("surfaces")
        if not isinstance(path, str):
            raise TreeFormatError(f"nodes[{i}].path must be a string")
        if not isinstance(surfaces, list) or not all(isinstance(s, str) for s in surfaces):
            raise TreeFormatError(f"nodes[{i}].surfaces must be a list of strings")
        entities.append(
            Entity(entity_id=i, path=path, surfaces=tuple(s.strip() for s in surfaces))
        )
    return OntologyTree(entities)


def load_tree(path) -> OntologyTree:
    """Load a tree file; canonical order is derived, never stored."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise TreeFormatError(f"{path}: {exc.strerror}") from exc
    return tree_from_dict(doc)


def save_tree(tree: OntologyTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh, ensure_ascii=False, indent=2)
        fh.write("\n")

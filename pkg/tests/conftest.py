"""Shared fixtures: bundled data, synthetic trees, and kernel selection."""

from __future__ import annotations

from importlib import resources

import pytest

from semstego import kernel
from semstego.distribution import ClassDistribution, build_distribution
from semstego.semantic_space import (
    Entity,
    OntologyTree,
    SemType,
    extract_type,
    tree_from_dict,
)


def make_tree(n: int, concepts: int = 5) -> OntologyTree:
    """Synthetic n-entity tree with unique single-token surfaces.

    Paths spread over several concepts so canonical rank differs from
    entity id.
    """
    entities = []
    for i in range(n):
        c = i % concepts
        path = f"Cat{c}/Sub{c}{i % 3}/Thing{i:03d}"
        entities.append(Entity(entity_id=i, path=path, surfaces=(f"thing{i:03d}",)))
    return OntologyTree(entities)


def dist_from_counts(tree: OntologyTree, counts: dict[tuple, int]) -> ClassDistribution:
    """Distribution from {(entity ids with repetition): count} specs."""
    records = []
    for ids, c in counts.items():
        t = SemType({})
        agg: dict[int, int] = {}
        for eid in ids:
            agg[eid] = agg.get(eid, 0) + 1
        t = SemType(agg)
        records.extend([t] * c)
    return build_distribution(records, tree)


@pytest.fixture(scope="session")
def tree() -> OntologyTree:
    doc = resources.files("semstego.data").joinpath("tree.json").read_text(encoding="utf-8")
    import json

    return tree_from_dict(json.loads(doc))


@pytest.fixture(scope="session")
def corpus_lines() -> list[str]:
    text = resources.files("semstego.data").joinpath("corpus.txt").read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]


@pytest.fixture(scope="session")
def corpus_dist(tree, corpus_lines) -> ClassDistribution:
    return build_distribution([extract_type(line, tree) for line in corpus_lines], tree)


@pytest.fixture(params=sorted(kernel.available()))
def any_kernel(request, monkeypatch):
    """Run the test once per importable walk kernel."""
    monkeypatch.setattr(kernel, "active", kernel.available()[request.param])
    monkeypatch.setattr(kernel, "active_name", request.param)
    return request.param

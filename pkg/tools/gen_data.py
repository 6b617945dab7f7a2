#!/usr/bin/env python3
"""Regenerate the bundled entity tree and demo corpus.

The corpus is rendered with the mock generation agent so that every line
extracts back to exactly its intended type; the script asserts this and
also asserts that no template filler token collides with a surface form.
Outputs are committed under src/semstego/data/.
"""

import json
import random
import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from semstego.agents import MockGenerationAgent, _CLOSERS, _EMPTY_SENTENCES, _GENERIC_OPENERS, _OPENERS
from semstego.semantic_space import OntologyTree, SemType, extract_type, tree_from_dict

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "semstego" / "data"

NODES = [
    # Location
    ("Location/Tourism Location/Las Vegas", ["Las Vegas", "Vegas"]),
    ("Location/Tourism Location/Taj Mahal", ["Taj Mahal"]),
    ("Location/Tourism Location/Eiffel Tower", ["Eiffel Tower"]),
    ("Location/Tourism Location/Grand Canyon", ["Grand Canyon"]),
    ("Location/Tourism Location/Niagara Falls", ["Niagara Falls"]),
    ("Location/City/Washington", ["Washington"]),
    ("Location/City/New York", ["New York"]),
    ("Location/City/York", ["York"]),
    ("Location/City/Paris", ["Paris"]),
    ("Location/City/Tokyo", ["Tokyo"]),
    ("Location/City/Lisbon", ["Lisbon"]),
    ("Location/Educational Location/Oxford", ["Oxford"]),
    ("Location/Educational Location/Cambridge", ["Cambridge"]),
    ("Location/Educational Location/Stanford", ["Stanford"]),
    # Person
    ("Person/Historical Figure/Washington", ["Washington"]),
    ("Person/Historical Figure/Napoleon", ["Napoleon"]),
    ("Person/Historical Figure/Cleopatra", ["Cleopatra"]),
    ("Person/Historical Figure/Einstein", ["Einstein"]),
    ("Person/Historical Figure/Mr. Kee", ["Mr. Kee", "Mr Kee"]),
    ("Person/Professional/doctor", ["doctor"]),
    ("Person/Professional/teacher", ["teacher"]),
    ("Person/Professional/engineer", ["engineer"]),
    ("Person/Professional/nurse", ["nurse"]),
    ("Person/Fictional Character/Sherlock Holmes", ["Sherlock Holmes", "Sherlock"]),
    ("Person/Fictional Character/Batman", ["Batman"]),
    ("Person/Fictional Character/Hermione", ["Hermione"]),
    # Time
    ("Time/Season/spring", ["spring"]),
    ("Time/Season/summer", ["summer"]),
    ("Time/Season/autumn", ["autumn"]),
    ("Time/Season/winter", ["winter"]),
    ("Time/Duration/many years", ["many years"]),
    ("Time/Duration/a decade", ["a decade"]),
    ("Time/Duration/fortnight", ["fortnight"]),
    ("Time/Holiday/Christmas", ["Christmas"]),
    ("Time/Holiday/Halloween", ["Halloween"]),
    ("Time/Holiday/Ramadan", ["Ramadan"]),
    # Food
    ("Food/Fruit/apple", ["apple"]),
    ("Food/Fruit/mango", ["mango"]),
    ("Food/Fruit/papaya", ["papaya"]),
    ("Food/Fruit/lychee", ["lychee"]),
    ("Food/Dish/sushi", ["sushi"]),
    ("Food/Dish/paella", ["paella"]),
    ("Food/Dish/lasagna", ["lasagna"]),
    ("Food/Dish/goulash", ["goulash"]),
    ("Food/Beverage/espresso", ["espresso"]),
    ("Food/Beverage/matcha", ["matcha"]),
    ("Food/Beverage/cider", ["cider"]),
    # Animal
    ("Animal/Pet/beagle", ["beagle"]),
    ("Animal/Pet/tabby", ["tabby"]),
    ("Animal/Pet/parakeet", ["parakeet"]),
    ("Animal/Wild Animal/cheetah", ["cheetah"]),
    ("Animal/Wild Animal/walrus", ["walrus"]),
    ("Animal/Wild Animal/ibex", ["ibex"]),
    ("Animal/Wild Animal/pangolin", ["pangolin"]),
    # Organization
    ("Organization/Company/Acme Corp", ["Acme Corp", "Acme"]),
    ("Organization/Company/Globex", ["Globex"]),
    ("Organization/Company/Initech", ["Initech"]),
    ("Organization/Sports Team/Red Sox", ["Red Sox"]),
    ("Organization/Sports Team/Lakers", ["Lakers"]),
    ("Organization/Sports Team/Ajax", ["Ajax"]),
]


def check_templates(tree: OntologyTree) -> None:
    """No surface form may be composable purely from template tokens."""
    toks = set()
    for bank in (*_OPENERS.values(), _GENERIC_OPENERS, _CLOSERS, _EMPTY_SENTENCES):
        for text in bank:
            assert not extract_type(text, tree), f"template mentions an entity: {text!r}"
            toks.update(w.strip(".,'?!;:").casefold() for w in text.split())
    for ent in tree.entities:
        for surface in ent.surfaces:
            parts = surface.casefold().split()
            assert not all(p.strip(".,") in toks for p in parts), (
                f"surface {surface!r} could be composed from template tokens"
            )


def main() -> None:
    tree = tree_from_dict({"version": 1, "nodes": [
        {"path": p, "surfaces": s} for p, s in NODES
    ]})
    check_templates(tree)

    rng = random.Random(20240917)
    ga = MockGenerationAgent(tree, seed=7, fault_rate=0.0)
    # Only entities whose canonical surface extracts back to themselves can
    # appear in corpus types (e.g. the Person-side "Washington" loses the
    # shared surface to the canonically-first Location path).
    ids = [
        e.entity_id
        for e in tree.entities
        if extract_type(e.canonical_surface, tree).count(e.entity_id)
    ]

    types: list[SemType] = []
    # Empty type: a visible stop probability at the root.
    types += [SemType()] * 12
    # Singles: skewed popularity so the distribution is far from uniform.
    singles = rng.sample(ids, 44)
    for i, eid in enumerate(singles):
        types += [SemType({eid: 1})] * (1 + (3 if i < 6 else 1 if i < 24 else 0))
    # Doubles with one same-entity pair flavor.
    for _ in range(52):
        a, b = rng.sample(ids, 2)
        types.append(SemType({a: 1, b: 1}))
    for _ in range(6):
        a = rng.choice(ids)
        types.append(SemType({a: 2}))
    # Triples and quads.
    for _ in range(22):
        picks = rng.sample(ids, 3)
        types.append(SemType({p: 1 for p in picks}))
    for _ in range(10):
        picks = rng.sample(ids, 4)
        types.append(SemType({p: 1 for p in picks}))

    rng.shuffle(types)
    lines = []
    for i, t in enumerate(types):
        sentence = ga.generate(t, paths=tuple(), attempt=i % 3)
        got = extract_type(sentence, tree)
        assert got == t, (sentence, tree.describe_type(t), tree.describe_type(got))
        lines.append(sentence)

    DATA_DIR.mkdir(parents=True, exist_ok=True)
    tree_doc = {"version": 1, "nodes": [{"path": p, "surfaces": s} for p, s in NODES]}
    (DATA_DIR / "tree.json").write_text(
        json.dumps(tree_doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    (DATA_DIR / "corpus.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    hist = Counter(min(sum(n for _, n in t.items()), 9) for t in types)
    print(f"wrote {len(NODES)} entities, {len(lines)} corpus lines")
    print("type-length histogram:", dict(sorted(hist.items())))


if __name__ == "__main__":
    main()

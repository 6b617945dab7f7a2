"""Channel-level text perturbations and the evaluation harness.

Attacks operate on whitespace tokens of the rendered sentence (the threat
model is copy-paste channels, not model tokenizers): insert copies a
random token to a random position, delete removes one, replace swaps a
victim for another token drawn from the sentence's own token set, and
swap exchanges two positions.  Everything is deterministic given the
seed.  A ``TokenGuard`` can confine perturbations to tokens that play no
part in any entity surface form, the setting under which decoding
provably survives.
"""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass, field
from typing import Sequence

from .codec import SampleTrace, decode_type
from .errors import SemStegoError, UnknownClassError, DeadPrefixError, ExtractionFailedError
from .semantic_space import OntologyTree, type_len
from .agents import extract_sentence_type

ATTACK_KINDS = ("insert", "delete", "replace", "swap")

_PUNCT_STRIP = str.maketrans("", "", string.punctuation)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class AttackOutcome:
    text: str
    applied: bool  # False when the sentence was too short to perturb


@dataclass(frozen=True)
class TokenGuard:
    """Positions and token strings an attack must leave alone."""

    protected: frozenset[int]
    blocked_slots: frozenset[int]  # insertion points that would split a span
    blocked_tokens: frozenset[str]  # normalized tokens tied to surface forms


def entity_token_guard(sentence: str, tree: OntologyTree) -> TokenGuard:
    """Guard that keeps attacks away from anything entity-shaped.

    Protects every token that appears in any surface form (not only
    matched spans: a stray surface token could combine with an inserted
    one into a fresh match), blocks insertions inside matched spans, and
    blocks surface tokens from being inserted or used as replacements.
    """
    tokens = sentence.split()
    surface_tokens = tree.surface_tokens
    protected = {
        i
        for i, tok in enumerate(tokens)
        if tok.casefold().translate(_PUNCT_STRIP) in surface_tokens
    }
    blocked_slots: set[int] = set()
    for _, first, last in tree.find_entities(sentence):
        protected.update(range(first, last + 1))
        blocked_slots.update(range(first + 1, last + 1))
    blocked_tokens = frozenset(
        tok for i, tok in enumerate(tokens) if i in protected
    )
    return TokenGuard(
        protected=frozenset(protected),
        blocked_slots=frozenset(blocked_slots),
        blocked_tokens=blocked_tokens,
    )


def attack(sentence: str, spec: AttackSpec, guard: TokenGuard | None = None) -> AttackOutcome:
    """Apply exactly ``spec.count`` seeded perturbations.

    Sentences with fewer than two tokens come back unchanged and flagged.
    With a guard, only unguarded tokens/slots are eligible; if nothing is
    eligible the sentence is likewise returned unchanged and flagged.
    """
    rng = random.Random(spec.seed)
    tokens = sentence.split()
    if len(tokens) < 2:
        return AttackOutcome(text=sentence, applied=False)
    for _ in range(spec.count):
        current = " ".join(tokens)
        g = guard if guard is None else _refresh_guard(current, guard)
        tokens = _apply_once(tokens, spec.kind, rng, g)
        if tokens is None:
            return AttackOutcome(text=current, applied=False)
    return AttackOutcome(text=" ".join(tokens), applied=True)


def _refresh_guard(sentence: str, stale: TokenGuard) -> TokenGuard:
    # Positions shift between applications; token membership does not, so
    # rebuild positional info from the blocked token strings.
    tokens = sentence.split()
    protected = frozenset(i for i, t in enumerate(tokens) if t in stale.blocked_tokens)
    blocked_slots = frozenset(
        i for i in range(1, len(tokens)) if i - 1 in protected and i in protected
    )
    return TokenGuard(
        protected=protected, blocked_slots=blocked_slots, blocked_tokens=stale.blocked_tokens
    )


def _apply_once(
    tokens: list[str], kind: str, rng: random.Random, guard: TokenGuard | None
) -> list[str] | None:
    allowed = [
        i for i in range(len(tokens)) if guard is None or i not in guard.protected
    ]
    if kind == "insert":
        if not allowed:
            return None
        source = rng.choice(allowed)
        slots = [
            s
            for s in range(len(tokens) + 1)
            if guard is None or s not in guard.blocked_slots
        ]
        slot = rng.choice(slots)
        out = list(tokens)
        out.insert(slot, tokens[source])
        return out
    if kind == "delete":
        if not allowed:
            return None
        victim = rng.choice(allowed)
        return tokens[:victim] + tokens[victim + 1:]
    if kind == "replace":
        if not allowed:
            return None
        victim = rng.choice(allowed)
        pool = sorted(set(tokens) - {tokens[victim]})
        if guard is not None:
            pool = [t for t in pool if t not in guard.blocked_tokens]
        if not pool:
            return None
        out = list(tokens)
        out[victim] = rng.choice(pool)
        return out
    if kind == "swap":
        if len(allowed) < 2:
            return None
        i, j = rng.sample(allowed, 2)
        out = list(tokens)
        out[i], out[j] = out[j], out[i]
        return out
    raise AssertionError(kind)


# -- metrics ---------------------------------------------------------------


def embedding_rate(traces: Sequence[SampleTrace], sentences: Sequence[str]) -> tuple[float, float]:
    """(bits per sentence, bits per whitespace token)."""
    if len(traces) != len(sentences) or not traces:
        raise SemStegoError("need matching, non-empty traces and sentences")
    total_bits = sum(t.bits_embedded for t in traces)
    total_tokens = sum(len(s.split()) for s in sentences)
    return total_bits / len(traces), total_bits / total_tokens if total_tokens else 0.0


def msr_estimate(p: float, n: float) -> float:
    """Success probability of ``n`` independent tries at per-try rate ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    if n < 0:
        raise ValueError("n must be non-negative")
    return 1.0 - (1.0 - p) ** n


def distinct_n(sentences: Sequence[str], n: int) -> float:
    """Unique n-grams over total n-grams, on whitespace tokens."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0
    unique: set[tuple[str, ...]] = set()
    for sentence in sentences:
        tokens = sentence.split()
        for i in range(len(tokens) - n + 1):
            unique.add(tuple(tokens[i:i + n]))
            total += 1
    if total == 0:
        raise SemStegoError(f"corpus has no {n}-grams")
    return len(unique) / total


@dataclass
class DSRReport:
    """Decoding success per type length."""

    buckets: dict[int, tuple[int, int]] = field(default_factory=dict)  # |T| -> (ok, total)

    def add(self, length: int, success: bool) -> None:
        ok, total = self.buckets.get(length, (0, 0))
        self.buckets[length] = (ok + int(success), total + 1)

    def rate(self, length: int) -> float:
        ok, total = self.buckets.get(length, (0, 0))
        return ok / total if total else float("nan")

    @property
    def overall(self) -> float:
        ok = sum(o for o, _ in self.buckets.values())
        total = sum(t for _, t in self.buckets.values())
        return ok / total if total else float("nan")


def decoding_success_rate(
    pairs: Sequence[tuple[SampleTrace, str]], session
) -> DSRReport:
    """Exact-bit recovery rate of attacked sentences, bucketed by |T|.

    Success means the attacked sentence decodes to exactly the bits of its
    ground-truth trace; extraction failures and unknown classes count as
    failures.
    """
    report = DSRReport()
    for trace, sentence in pairs:
        try:
            t = extract_sentence_type(sentence, session.tree, session.ea)
            bits = tuple(decode_type(t, session.dist, session.tree).bits())
            success = bits == trace.embedded_bits
        except (UnknownClassError, DeadPrefixError, ExtractionFailedError):
            success = False
        report.add(type_len(trace.sem_type), success)
    return report


@dataclass
class EvalReport:
    """Aggregate harness output, renderable as a table or JSON."""

    dsr: DSRReport
    bits_per_sentence: float
    bits_per_token: float
    mission_success_rate: float
    distinct3: float
    iteration_histogram: dict[int, int]
    attack: dict | None = None
    seeds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "decoding_success_rate": {
                str(k): {"ok": ok, "total": total, "rate": ok / total if total else None}
                for k, (ok, total) in sorted(self.dsr.buckets.items())
            },
            "embedding_rate": {
                "bits_per_sentence": self.bits_per_sentence,
                "bits_per_token": self.bits_per_token,
            },
            "mission_success_rate": self.mission_success_rate,
            "distinct_3": self.distinct3,
            "iteration_histogram": {str(k): v for k, v in sorted(self.iteration_histogram.items())},
            "attack": self.attack,
            "seeds": self.seeds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def render_table(self) -> str:
        lines = ["metric                     value", "-" * 34]
        for length, (ok, total) in sorted(self.dsr.buckets.items()):
            lines.append(f"DSR |T|={length:<2}               {ok}/{total} = {ok / total:.3f}")
        lines.append(f"bits/sentence              {self.bits_per_sentence:.4f}")
        lines.append(f"bits/token                 {self.bits_per_token:.4f}")
        lines.append(f"mission success rate       {self.mission_success_rate:.3f}")
        lines.append(f"distinct-3                 {self.distinct3:.4f}")
        total_gens = sum(self.iteration_histogram.values()) or 1
        for k, v in sorted(self.iteration_histogram.items()):
            lines.append(f"{k} iteration(s)             {100.0 * v / total_gens:.2f}%")
        return "\n".join(lines)

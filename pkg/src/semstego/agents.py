"""Generation, check, and extraction agents plus the feedback loop.

Three roles sit behind small protocols: the generation agent writes a
sentence for a target type, the check agent approves it or returns a
corrective hint, and the extraction agent recovers a sentence's type for
decoding.  Live agents talk to an OpenAI-compatible chat endpoint; mock
agents are fully deterministic and template-driven so the whole pipeline
runs offline.  The mock generation agent has a seeded fault-injection
mode (stray entity, missing entity, typo) to exercise the feedback loop.
"""

from __future__ import annotations

import hashlib
import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .errors import (
    AgentAuthError,
    AgentHTTPError,
    AgentTimeoutError,
    ExtractionFailedError,
    GenerationFailedError,
)
from .semantic_space import OntologyTree, SemType, extract_type, type_len

logger = logging.getLogger("semstego.agents")


@dataclass(frozen=True)
class FeedbackConfig:
    """Bounds and sampling passthrough for the regeneration loop."""

    max_iterations: int = 5
    temperature: float = 0.8
    top_p: float = 0.8

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class CheckVerdict:
    approved: bool
    hint: str = ""

    def __post_init__(self):
        if not self.approved and not self.hint:
            raise ValueError("a rejection needs a non-empty hint")
        if self.approved and self.hint:
            raise ValueError("an approval carries no hint")


@dataclass(frozen=True)
class AgentRequest:
    """One agent call: what role it plays and what it gets to see."""

    role: str  # generate | check | extract
    target_type: SemType | None = None
    paths: tuple[str, ...] = ()
    sentence: str | None = None
    hint: str | None = None
    attempt: int = 0

    def __post_init__(self):
        if self.role not in ("generate", "check", "extract"):
            raise ValueError(f"unknown agent role {self.role!r}")
        if self.role == "generate" and self.target_type is None:
            raise ValueError("generate requests need a target type")
        if self.role == "check" and (self.target_type is None or self.sentence is None):
            raise ValueError("check requests need a sentence and a target type")
        if self.role == "extract" and self.sentence is None:
            raise ValueError("extract requests need a sentence")


class GenerationAgent(Protocol):
    def generate(
        self, target: SemType, paths: Sequence[str], hint: str | None,
        previous: str | None, attempt: int,
    ) -> str: ...


class CheckAgent(Protocol):
    def check(self, sentence: str, target: SemType) -> CheckVerdict: ...


class ExtractionAgent(Protocol):
    def extract(self, sentence: str) -> SemType: ...


# -- feedback loop -------------------------------------------------------


def generate_stego(
    target: SemType,
    paths: Sequence[str],
    cfg: FeedbackConfig,
    ga: GenerationAgent,
    ca: CheckAgent,
) -> tuple[str, int]:
    """Generate until the check agent approves.

    Returns (sentence, iterations) where iterations counts regenerations
    (0 means the first attempt passed).  Raises GenerationFailedError,
    carrying the last hint, once max_iterations regenerations failed.
    """
    hint: str | None = None
    previous: str | None = None
    for attempt in range(cfg.max_iterations + 1):
        sentence = ga.generate(target, paths, hint=hint, previous=previous, attempt=attempt)
        verdict = ca.check(sentence, target)
        if verdict.approved:
            return sentence, attempt
        hint = verdict.hint
        previous = sentence
    raise GenerationFailedError(
        f"no compliant sentence after {cfg.max_iterations} regenerations", last_hint=hint or ""
    )


def check_sentence(sentence: str, target: SemType, tree: OntologyTree) -> CheckVerdict:
    """Deterministic check: approve iff the extracted type equals the target.

    The hint names one extraneous entity first (it must be removed before
    missing ones can be judged fairly), then one missing entity.
    """
    found = extract_type(sentence, tree)
    if found == target:
        return CheckVerdict(approved=True)
    for ent in tree.canonical_entities:
        have, want = found.count(ent.entity_id), target.count(ent.entity_id)
        if have > want:
            return CheckVerdict(
                approved=False,
                hint=(
                    f"'{ent.canonical_surface}' should not be in the sentence because "
                    f"it is an element of the {ent.concept} category."
                ),
            )
    for ent in tree.canonical_entities:
        have, want = found.count(ent.entity_id), target.count(ent.entity_id)
        if have < want:
            return CheckVerdict(
                approved=False,
                hint=(
                    f"The sentence must mention '{ent.canonical_surface}' "
                    f"({ent.path}) exactly {want} time(s); it appears {have} time(s)."
                ),
            )
    raise AssertionError("unequal types must differ somewhere")


def extract_sentence_type(sentence: str, tree: OntologyTree, ea: ExtractionAgent) -> SemType:
    """Recover a sentence's type through the extraction agent."""
    AgentRequest(role="extract", sentence=sentence)
    return ea.extract(sentence)


# -- mock agents ---------------------------------------------------------

_OPENERS = {
    "Location": (
        "Our travel notes from last month still gush about",
        "The itinerary we keep revising now features",
        "Every postcard on the fridge somehow involves",
    ),
    "Person": (
        "During the long staff meeting everyone kept quoting",
        "The biography chapter we proofread keeps returning to",
        "Half the dinner conversation orbited around",
    ),
    "Time": (
        "The project retrospective dwelled on",
        "Grandpa's stories always circle back to",
        "The planning memo is oddly fixated on",
    ),
    "Food": (
        "The pantry inventory we typed up lists",
        "Tonight's improvised menu leans heavily on",
        "The cookbook draft opens with an ode to",
    ),
    "Animal": (
        "The shelter newsletter leads with a story about",
        "Our neighbor's endless anecdotes involve",
        "The vet's waiting room gossip concerned",
    ),
    "Organization": (
        "The quarterly briefing spent ages discussing",
        "The newsletter's business section profiled",
        "Water-cooler speculation today revolved around",
    ),
}

_GENERIC_OPENERS = (
    "The latest draft of the report casually mentions",
    "The marginal note scribbled in blue ink highlights",
    "That rambling voicemail from yesterday mostly praised",
)

_CLOSERS = (
    "with an enthusiasm that surprised absolutely nobody present.",
    "before the conversation drifted somewhere else entirely.",
    "though nobody could quite explain the sudden interest.",
    "which made the whole afternoon feel strangely productive.",
    "and the room went quiet for a thoughtful moment afterwards.",
)

_EMPTY_SENTENCES = (
    "Nothing remarkable happened during the quiet gray commute this morning.",
    "The afternoon dissolved into harmless small talk about absolutely nothing.",
    "A slow drizzle kept everyone indoors with their lukewarm drinks.",
    "The meeting adjourned early because nobody had anything left to say.",
)


def _stable_rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


class MockGenerationAgent:
    """Template generation with optional seeded fault injection.

    Faults (a stray entity, a dropped mention, or a typo inside a surface
    form) fire with probability ``fault_rate`` per attempt and stop firing
    from attempt ``converge_after`` on, so the feedback loop always
    terminates under the default iteration budget.
    """

    def __init__(
        self,
        tree: OntologyTree,
        seed: int = 0,
        fault_rate: float = 0.0,
        fault_modes: tuple[str, ...] = ("extra", "missing", "typo"),
        converge_after: int = 3,
    ):
        self.tree = tree
        self.seed = seed
        self.fault_rate = fault_rate
        self.fault_modes = fault_modes
        self.converge_after = converge_after

    def generate(self, target, paths, hint=None, previous=None, attempt=0) -> str:
        AgentRequest(
            role="generate", target_type=target, paths=tuple(paths),
            hint=hint, sentence=previous, attempt=attempt,
        )
        rng = _stable_rng("gen", self.seed, tuple(target.items()), attempt)
        sentence = self._compose(target, rng)
        if attempt < self.converge_after and rng.random() < self.fault_rate:
            sentence = self._inject_fault(sentence, target, rng)
        return sentence

    def _compose(self, target: SemType, rng: random.Random) -> str:
        if not target:
            return rng.choice(_EMPTY_SENTENCES)
        mentions: list[str] = []
        first_concept = None
        for eid, count in sorted(target.items(), key=lambda kv: self.tree.rank(kv[0])):
            ent = self.tree.entity(eid)
            if first_concept is None:
                first_concept = ent.concept
            mentions.extend([ent.canonical_surface] * count)
        opener = rng.choice(_OPENERS.get(first_concept, _GENERIC_OPENERS))
        closer = rng.choice(_CLOSERS)
        if len(mentions) == 1:
            body = mentions[0]
        else:
            body = ", ".join(mentions[:-1]) + " and " + mentions[-1]
        return f"{opener} {body} {closer}"

    def _inject_fault(self, sentence: str, target: SemType, rng: random.Random) -> str:
        mode = rng.choice(self.fault_modes)
        if mode == "extra":
            extras = [e for e in self.tree.canonical_entities if not target.count(e.entity_id)]
            if extras:
                stray = rng.choice(extras).canonical_surface
                return f"{sentence[:-1]} near {stray}."
        if mode == "missing" and target:
            eid = rng.choice(target.entity_ids())
            surface = self.tree.entity(eid).canonical_surface
            return sentence.replace(surface, "something", 1)
        if mode == "typo" and target:
            eid = rng.choice(target.entity_ids())
            surface = self.tree.entity(eid).canonical_surface
            return sentence.replace(surface, surface[:-1] + "q", 1)
        return f"{sentence[:-1]} twice."  # degenerate targets: stay harmless


class MockCheckAgent:
    """Wraps :func:`check_sentence` as an agent."""

    def __init__(self, tree: OntologyTree):
        self.tree = tree

    def check(self, sentence: str, target: SemType) -> CheckVerdict:
        AgentRequest(role="check", target_type=target, sentence=sentence)
        return check_sentence(sentence, target, self.tree)


class MockExtractionAgent:
    """Delegates to the offline gazetteer extractor."""

    def __init__(self, tree: OntologyTree):
        self.tree = tree

    def extract(self, sentence: str) -> SemType:
        AgentRequest(role="extract", sentence=sentence)
        return extract_type(sentence, self.tree)


# -- live agents ---------------------------------------------------------


@dataclass(frozen=True)
class EndpointConfig:
    """Chat-completions endpoint settings; the key stays in the environment."""

    endpoint_url: str
    model_name: str
    api_key_env: str = "SEMSTEGO_API_KEY"
    timeout_ms: int = 30_000
    max_retries: int = 3
    max_concurrency: int = 4


_TRANSIENT_STATUSES = frozenset({429, 500, 502, 503, 504})


def _requests_transport(url, headers, body, timeout_s):
    import requests

    try:
        resp = requests.post(url, headers=headers, json=body, timeout=timeout_s)
    except requests.Timeout as exc:
        raise TimeoutError(str(exc)) from exc
    except requests.ConnectionError as exc:
        raise ConnectionError(str(exc)) from exc
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    return resp.status_code, payload


class ChatClient:
    """One chat-completion call with bounded retries and redacted logging.

    Transient failures (429/5xx, timeouts, connection drops) retry with
    exponential backoff up to ``max_retries`` extra attempts; auth errors
    never retry.  At most ``max_concurrency`` requests are in flight.
    """

    def __init__(
        self,
        config: EndpointConfig,
        transport: Callable = _requests_transport,
        sleep: Callable[[float], None] = time.sleep,
        env: dict | None = None,
    ):
        import os

        self.config = config
        self._transport = transport
        self._sleep = sleep
        self._env = env if env is not None else os.environ
        self._gate = threading.Semaphore(config.max_concurrency)

    def call(self, prompt: str, temperature: float = 0.8, top_p: float = 0.8) -> str:
        key = self._env.get(self.config.api_key_env)
        if not key:
            raise AgentAuthError(
                f"environment variable {self.config.api_key_env} is not set"
            )
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "top_p": top_p,
        }
        timeout_s = self.config.timeout_ms / 1000.0
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(0.5 * (2 ** (attempt - 1)))
                logger.warning("retrying chat call (attempt %d): %s", attempt + 1, last_error)
            logger.debug(
                "POST %s model=%s prompt_chars=%d auth=<redacted>",
                self.config.endpoint_url, self.config.model_name, len(prompt),
            )
            try:
                with self._gate:
                    status, payload = self._transport(
                        self.config.endpoint_url, headers, body, timeout_s
                    )
            except TimeoutError as exc:
                last_error = AgentTimeoutError(f"request timed out: {exc}")
                continue
            except ConnectionError as exc:
                last_error = AgentHTTPError(f"connection failed: {exc}")
                continue
            if status in (401, 403):
                raise AgentAuthError(f"endpoint rejected credentials (HTTP {status})")
            if status in _TRANSIENT_STATUSES:
                last_error = AgentHTTPError(f"transient HTTP {status}", status=status)
                continue
            if status != 200:
                raise AgentHTTPError(f"HTTP {status}", status=status)
            try:
                return payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise AgentHTTPError("malformed chat response payload") from None
        raise last_error  # type: ignore[misc]


def generation_prompt(
    target: SemType, paths: Sequence[str], tree: OntologyTree,
    hint: str | None, previous: str | None,
) -> str:
    """Prompt for the generation agent, parameterized by entity paths."""
    if not target:
        base = (
            "Write one natural sentence about everyday life that names no "
            "specific person, place, organization, food, animal, or time span. "
            "Reply with the sentence only."
        )
    else:
        surfaces = []
        clauses = []
        for eid, count in sorted(target.items(), key=lambda kv: tree.rank(kv[0])):
            ent = tree.entity(eid)
            surfaces.extend([ent.canonical_surface] * count)
            clause = (
                f"{ent.canonical_surface} is the element of the {ent.concept} "
                f"category ({ent.path}), and no other {ent.concept}-like element "
                f"should appear in the sentence."
            )
            if count > 1:
                clause += f" {ent.canonical_surface} must appear exactly {count} times."
            clauses.append(clause)
        base = (
            "Write a sentence containing the following keywords: "
            + ", ".join(surfaces) + ". In this case, " + " ".join(clauses)
            + " Reply with the sentence only."
        )
    if hint and previous:
        base += (
            f'\nYour previous sentence was: "{previous}"\nFeedback: {hint}\n'
            "Rewrite the sentence so every requirement holds."
        )
    return base


def check_prompt(sentence: str, target: SemType, tree: OntologyTree) -> str:
    wanted = ", ".join(
        f"{tree.entity(eid).path}: {n}"
        for eid, n in sorted(target.items(), key=lambda kv: tree.rank(kv[0]))
    ) or "none"
    return (
        "You verify constrained sentences against an entity catalog.\n"
        f"Required entities (path: count): {wanted}.\n"
        f'Sentence: "{sentence}"\n'
        "If the sentence contains exactly the required entities and no other "
        "catalog entity, reply APPROVED. Otherwise reply with one short hint "
        "naming a missing or extraneous entity."
    )


def extraction_prompt(sentence: str, tree: OntologyTree) -> str:
    catalog = "; ".join(e.path for e in tree.canonical_entities)
    return (
        "Extract every catalog entity occurring in the sentence.\n"
        f'Sentence: "{sentence}"\n'
        f"Catalog: {catalog}.\n"
        "Reply with one entity per line, formatted exactly as "
        "Concept/Subconcept/Entity: count. Reply NONE if there are none."
    )


class LiveGenerationAgent:
    def __init__(self, client: ChatClient, tree: OntologyTree, cfg: FeedbackConfig):
        self.client = client
        self.tree = tree
        self.cfg = cfg

    def generate(self, target, paths, hint=None, previous=None, attempt=0) -> str:
        AgentRequest(
            role="generate", target_type=target, paths=tuple(paths),
            hint=hint, sentence=previous, attempt=attempt,
        )
        prompt = generation_prompt(target, paths, self.tree, hint, previous)
        reply = self.client.call(prompt, self.cfg.temperature, self.cfg.top_p)
        return " ".join(reply.strip().splitlines()).strip()


class LiveCheckAgent:
    def __init__(self, client: ChatClient, tree: OntologyTree, cfg: FeedbackConfig):
        self.client = client
        self.tree = tree
        self.cfg = cfg

    def check(self, sentence: str, target: SemType) -> CheckVerdict:
        AgentRequest(role="check", target_type=target, sentence=sentence)
        reply = self.client.call(
            check_prompt(sentence, target, self.tree), self.cfg.temperature, self.cfg.top_p
        ).strip()
        if reply.upper().startswith("APPROVED"):
            return CheckVerdict(approved=True)
        return CheckVerdict(approved=False, hint=reply or "the sentence was rejected")


class LiveExtractionAgent:
    """Structured extraction with one retry on an unparseable reply."""

    def __init__(self, client: ChatClient, tree: OntologyTree, cfg: FeedbackConfig):
        self.client = client
        self.tree = tree
        self.cfg = cfg

    def extract(self, sentence: str) -> SemType:
        AgentRequest(role="extract", sentence=sentence)
        prompt = extraction_prompt(sentence, self.tree)
        last_exc: Exception | None = None
        for _ in range(2):
            reply = self.client.call(prompt, temperature=0.0, top_p=1.0)
            try:
                return self._parse(reply)
            except ValueError as exc:
                last_exc = exc
        raise ExtractionFailedError(f"unparseable extraction reply: {last_exc}")

    def _parse(self, reply: str) -> SemType:
        counts: dict[str, int] = {}
        lines = [ln.strip() for ln in reply.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty reply")
        if len(lines) == 1 and lines[0].upper() == "NONE":
            return SemType()
        for line in lines:
            path, sep, count = line.rpartition(":")
            if not sep:
                raise ValueError(f"line {line!r} is not 'path: count'")
            try:
                n = int(count.strip())
            except ValueError:
                raise ValueError(f"bad count in {line!r}") from None
            if n <= 0:
                raise ValueError(f"non-positive count in {line!r}")
            counts[path.strip()] = counts.get(path.strip(), 0) + n
        return self.tree.type_from_paths(counts)

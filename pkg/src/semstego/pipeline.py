"""End-to-end sessions: bytes in, stego sentences out, and back.

Encoding frames and whitens the secret, samples one type per sentence,
and drives the feedback loop for each.  Decoding extracts each sentence's
type, recovers its interval prefix, unwhitens, and strips the frame.
Encoder and decoder sessions built from the same tree, distribution, key
and nonce are exact inverses.

Each sentence's walk reads the remaining payload through a per-sentence
keyed mask (see :mod:`semstego.crypto`), so a sentence that happens to
embed zero bits cannot repeat forever; the decoder replays masks from the
sentence index.  A generation failure is a hard error: silently resampling
a different type would desynchronize the decoder, which has no side
channel to learn about exclusions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Sequence

from .agents import (
    ChatClient,
    CheckAgent,
    EndpointConfig,
    ExtractionAgent,
    FeedbackConfig,
    GenerationAgent,
    LiveCheckAgent,
    LiveExtractionAgent,
    LiveGenerationAgent,
    MockCheckAgent,
    MockExtractionAgent,
    MockGenerationAgent,
    extract_sentence_type,
    generate_stego,
)
from .bits import BitStream
from .codec import SampleTrace, class_interval, decode_type, embed_message, sample_type
from .crypto import StegoKey, derandomize, padded_random_stream, sentence_mask, unframe_payload
from .distribution import ClassDistribution
from .errors import (
    DeadPrefixError,
    ExtractionFailedError,
    NoCapacityError,
    StegoFormatError,
    TruncatedMessageError,
    UnknownClassError,
)
from .semantic_space import OntologyTree, SemType

STEGO_HEADER_PREFIX = "# semstego/1"


@dataclass
class Session:
    """Everything both ends must agree on, plus agent bindings."""

    tree: OntologyTree
    dist: ClassDistribution
    key: StegoKey
    feedback: FeedbackConfig
    ga: GenerationAgent
    ca: CheckAgent
    ea: ExtractionAgent
    mode: str = "mock"

    @classmethod
    def mock(
        cls,
        tree: OntologyTree,
        dist: ClassDistribution,
        key: StegoKey,
        seed: int = 0,
        fault_rate: float = 0.0,
        feedback: FeedbackConfig | None = None,
    ) -> "Session":
        fb = feedback or FeedbackConfig()
        return cls(
            tree=tree,
            dist=dist,
            key=key,
            feedback=fb,
            ga=MockGenerationAgent(tree, seed=seed, fault_rate=fault_rate),
            ca=MockCheckAgent(tree),
            ea=MockExtractionAgent(tree),
            mode="mock",
        )

    @classmethod
    def live(
        cls,
        tree: OntologyTree,
        dist: ClassDistribution,
        key: StegoKey,
        endpoint: EndpointConfig,
        feedback: FeedbackConfig | None = None,
        client: ChatClient | None = None,
    ) -> "Session":
        fb = feedback or FeedbackConfig()
        client = client or ChatClient(endpoint)
        return cls(
            tree=tree,
            dist=dist,
            key=key,
            feedback=fb,
            ga=LiveGenerationAgent(client, tree, fb),
            ca=LiveCheckAgent(client, tree, fb),
            ea=LiveExtractionAgent(client, tree, fb),
            mode="live",
        )


@dataclass
class StegoMessage:
    """Ordered stego sentences and the metadata the decoder needs."""

    sentences: tuple[str, ...]
    nonce: bytes
    bits_embedded: tuple[int, ...] | None = None  # encoder-side bookkeeping
    traces: tuple[SampleTrace, ...] | None = None
    iterations: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.bits_embedded is not None and sum(self.bits_embedded) < 16:
            raise StegoFormatError("a stego message must carry at least the 16-bit header")

    def to_text(self) -> str:
        lines = [f"{STEGO_HEADER_PREFIX} nonce={self.nonce.hex()} sentences={len(self.sentences)}"]
        lines.extend(self.sentences)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StegoMessage":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith(STEGO_HEADER_PREFIX):
            raise StegoFormatError("missing stego metadata line")
        meta = dict(
            kv.split("=", 1) for kv in lines[0][len(STEGO_HEADER_PREFIX):].split() if "=" in kv
        )
        try:
            nonce = bytes.fromhex(meta["nonce"])
            count = int(meta["sentences"])
        except (KeyError, ValueError) as exc:
            raise StegoFormatError(f"bad stego metadata: {exc}") from exc
        sentences = tuple(lines[1:])
        if len(sentences) != count:
            raise StegoFormatError(
                f"metadata declares {count} sentences but file has {len(sentences)}"
            )
        return cls(sentences=sentences, nonce=nonce)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "StegoMessage":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class DecodeResult:
    """Recovered payload plus per-sentence diagnostics."""

    payload: bytes
    sentence_errors: tuple[str | None, ...]
    truncated: bool
    detail: str = ""
    bits_recovered: int = 0

    @property
    def ok(self) -> bool:
        return not self.truncated and all(e is None for e in self.sentence_errors)


def encode_message(secret: bytes, session: Session) -> StegoMessage:
    """Embed ``secret`` into freshly generated stego sentences.

    Raises NoCapacityError for a single-class distribution (nothing to
    choose means nothing to embed) and GenerationFailedError if a sentence
    exhausts the feedback budget.
    """
    if len(session.dist) < 2:
        raise NoCapacityError("distribution entropy is zero; no redundancy to embed bits")
    stream = padded_random_stream(secret, session.key)
    traces = embed_message(
        stream,
        session.dist,
        session.tree,
        whiten=lambda index: sentence_mask(session.key, index),
    )
    sentences: list[str] = []
    iterations: list[int] = []
    for trace in traces:
        paths = tuple(session.tree.entity(eid).path for eid in trace.entity_seq)
        sentence, iters = generate_stego(
            trace.sem_type, paths, session.feedback, session.ga, session.ca
        )
        sentences.append(_sanitize(sentence))
        iterations.append(iters)
    return StegoMessage(
        sentences=tuple(sentences),
        nonce=session.key.nonce,
        bits_embedded=tuple(t.bits_embedded for t in traces),
        traces=tuple(traces),
        iterations=tuple(iterations),
    )


def decode_message(stego: StegoMessage, session: Session) -> DecodeResult:
    """Recover the payload from a stego message.

    A sentence whose type cannot be mapped back to an interval is flagged
    rather than aborting the run; its missing bits usually surface as a
    truncated (or garbled) payload, which the result records.
    """
    key = session.key.with_nonce(stego.nonce)
    bits: list[int] = []
    errors: list[str | None] = []
    for index, sentence in enumerate(stego.sentences):
        try:
            t = extract_sentence_type(sentence, session.tree, session.ea)
            prefix = decode_type(t, session.dist, session.tree)
        except (UnknownClassError, DeadPrefixError, ExtractionFailedError) as exc:
            errors.append(str(exc))
            continue
        mask = sentence_mask(key, index)
        bits.extend(b ^ mask(i) for i, b in enumerate(prefix.bits()))
        errors.append(None)
    recovered = derandomize(BitStream(bits), key)
    try:
        payload = unframe_payload(recovered)
        return DecodeResult(
            payload=payload,
            sentence_errors=tuple(errors),
            truncated=False,
            bits_recovered=len(bits),
        )
    except TruncatedMessageError as exc:
        return DecodeResult(
            payload=b"",
            sentence_errors=tuple(errors),
            truncated=True,
            detail=str(exc),
            bits_recovered=len(bits),
        )


_WHITESPACE = re.compile(r"\s+")


def _sanitize(sentence: str) -> str:
    """One line per sentence is load-bearing for the wire format."""
    return _WHITESPACE.sub(" ", sentence).strip()


# -- ground-truth trace files (for the robustness/eval harness) -----------


def traces_to_dict(traces: Sequence[SampleTrace], tree: OntologyTree) -> dict:
    return {
        "version": 1,
        "traces": [
            {
                "type": tree.describe_type(t.sem_type),
                "entity_seq": [tree.entity(eid).path for eid in t.entity_seq],
                "bits_embedded": t.bits_embedded,
                "bits": "".join(str(b) for b in t.embedded_bits),
            }
            for t in traces
        ],
    }


def traces_from_dict(
    doc: dict, dist: ClassDistribution, tree: OntologyTree
) -> tuple[SampleTrace, ...]:
    """Rebuild traces from a ground-truth file (intervals recomputed)."""
    if not isinstance(doc, dict) or doc.get("version") != 1:
        raise StegoFormatError("unsupported trace file")
    out = []
    for i, rec in enumerate(doc.get("traces", [])):
        try:
            sem_type = tree.type_from_paths(rec["type"])
            seq = tuple(tree.entity_by_path(p).entity_id for p in rec["entity_seq"])
            bits = tuple(int(c) for c in rec["bits"])
            declared = int(rec["bits_embedded"])
        except Exception as exc:
            raise StegoFormatError(f"traces[{i}]: {exc}") from exc
        if declared != len(bits):
            raise StegoFormatError(f"traces[{i}]: bit count mismatch")
        interval = class_interval(dist, tree, sem_type)
        out.append(
            SampleTrace(
                entity_seq=seq,
                sem_type=sem_type,
                interval=interval,
                bits_embedded=declared,
                embedded_bits=bits,
                peeked_bits=declared,
            )
        )
    return tuple(out)


def save_traces(traces: Sequence[SampleTrace], tree: OntologyTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(traces_to_dict(traces, tree), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_traces(path, dist: ClassDistribution, tree: OntologyTree) -> tuple[SampleTrace, ...]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StegoFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return traces_from_dict(doc, dist, tree)

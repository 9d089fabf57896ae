"""Shared domain types for the misinformation pipeline.

Every value that crosses an agent boundary is defined here, together with a
canonical UTF-8 text serialization used for hashing, the audit chain, and the
wire format. Canonical form rules: struct fields in declared order, map keys
sorted lexicographically, timestamps rendered in UTC "Z" form, floats via
``repr``, byte fields base64-encoded.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

SCHEMA_VERSION = 1

ZERO_HASH = "0" * 64


class DomainError(Exception):
    """Base class for errors raised by the pipeline."""


class UnknownLabelError(DomainError):
    """A string does not name any taxonomy label."""


class Tone(str, Enum):
    NEUTRAL = "neutral"
    FORMAL = "formal"
    ACCESSIBLE = "accessible"


class ReportFormat(str, Enum):
    PROSE = "prose"
    BULLET = "bullet"
    REPORT = "report"


class ContentKind(str, Enum):
    HTML = "html"
    PDF = "pdf"
    PLAIN = "plain"


class Stage(str, Enum):
    CLASSIFY = "classify"
    EXTRACT = "extract"
    CORRECT = "correct"
    VERIFY = "verify"
    DONE = "done"


class Verdict(str, Enum):
    VERIFIED = "verified"
    REJECTED = "rejected"
    NEEDS_REVIEW = "needs_review"


class MisinfoLabel(str, Enum):
    """Closed 8-label taxonomy. Declaration order is the tie-break order."""

    STATISTICAL_ERROR = "statistical_error"
    CHERRY_PICKING = "cherry_picking"
    PROPAGANDA = "propaganda"
    MISREPRESENTATION = "misrepresentation"
    HISTORICAL_MANIPULATION = "historical_manipulation"
    LOGICAL_FALLACY = "logical_fallacy"
    FACTUAL_ERROR = "factual_error"
    NOT_MISINFORMATION = "not_misinformation"


TAXONOMY: tuple[MisinfoLabel, ...] = tuple(MisinfoLabel)
MISINFO_LABELS: tuple[MisinfoLabel, ...] = tuple(
    lab for lab in TAXONOMY if lab is not MisinfoLabel.NOT_MISINFORMATION
)
_LABEL_ORDER = {label: i for i, label in enumerate(TAXONOMY)}


def taxonomy_index(label: MisinfoLabel) -> int:
    return _LABEL_ORDER[label]


def parse_label(name: str) -> MisinfoLabel:
    """Case-insensitive match of a trimmed string against the taxonomy."""
    cleaned = name.strip().lower()
    for label in TAXONOMY:
        if cleaned == label.value:
            return label
    raise UnknownLabelError(f"unknown misinformation label: {name!r}")


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------

def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp missing timezone: {value!r}")
    return dt.astimezone(timezone.utc)


def render_timestamp(dt: datetime) -> str:
    """Render a datetime in canonical UTC "Z" form."""
    dt = dt.astimezone(timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        base += f".{dt.microsecond:06d}"
    return base + "Z"


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UserInstructions:
    tone: Tone = Tone.NEUTRAL
    format: ReportFormat = ReportFormat.REPORT
    min_independent_sources: int = 2
    min_authenticity: float = 0.6

    def __post_init__(self) -> None:
        if self.min_independent_sources < 1:
            raise ValueError("min_independent_sources must be >= 1")
        if not 0.0 <= self.min_authenticity <= 1.0:
            raise ValueError("min_authenticity must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "tone": self.tone.value,
            "format": self.format.value,
            "min_independent_sources": self.min_independent_sources,
            "min_authenticity": self.min_authenticity,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> UserInstructions:
        return cls(
            tone=Tone(data["tone"]),
            format=ReportFormat(data["format"]),
            min_independent_sources=int(data["min_independent_sources"]),
            min_authenticity=float(data["min_authenticity"]),
        )


@dataclass(frozen=True)
class Claim:
    """An input statement under analysis."""

    id: str
    text: str
    topic_hints: tuple[str, ...] = ()
    received_at: datetime = field(default_factory=utc_now)
    instructions: UserInstructions | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("claim text is empty")
        object.__setattr__(self, "topic_hints", tuple(self.topic_hints))

    def effective_instructions(self) -> UserInstructions:
        return self.instructions if self.instructions is not None else UserInstructions()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "topic_hints": list(self.topic_hints),
            "received_at": render_timestamp(self.received_at),
            "instructions": None if self.instructions is None else self.instructions.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Claim:
        instructions = data.get("instructions")
        return cls(
            id=data["id"],
            text=data["text"],
            topic_hints=tuple(data.get("topic_hints") or ()),
            received_at=parse_timestamp(data["received_at"]),
            instructions=None if instructions is None else UserInstructions.from_dict(instructions),
        )


@dataclass(frozen=True)
class Document:
    """Normalized source content with provenance metadata.

    Construction does not enforce invariants; ``validate_document`` reports
    violations as values so callers can reject bad corpus lines gracefully.
    """

    id: str
    url: str
    domain: str
    title: str
    author: str | None
    published_at: datetime
    modified_at: datetime | None
    body: str
    content_kind: ContentKind

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "url": self.url,
            "domain": self.domain,
            "title": self.title,
            "author": self.author,
            "published_at": render_timestamp(self.published_at),
            "modified_at": None if self.modified_at is None else render_timestamp(self.modified_at),
            "body": self.body,
            "content_kind": self.content_kind.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Document:
        modified = data.get("modified_at")
        return cls(
            id=data["id"],
            url=data["url"],
            domain=data["domain"],
            title=data["title"],
            author=data.get("author"),
            published_at=parse_timestamp(data["published_at"]),
            modified_at=None if modified is None else parse_timestamp(modified),
            body=data["body"],
            content_kind=ContentKind(data["content_kind"]),
        )


def validate_document(doc: Document) -> list[str]:
    """Check Document invariants; an empty list means the document is valid."""
    violations: list[str] = []
    if not doc.id:
        violations.append("id empty")
    if not doc.body.strip():
        violations.append("body empty")
    if doc.domain != doc.domain.lower():
        violations.append("domain not lowercase")
    if doc.modified_at is not None and doc.modified_at < doc.published_at:
        violations.append("modified_at precedes published_at")
    return violations


@dataclass(frozen=True)
class Chunk:
    """A contiguous text window of a document, the unit of retrieval."""

    id: str
    doc_id: str
    ordinal: int
    text: str
    embedding: tuple[float, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "text": self.text,
            "embedding": list(self.embedding),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Chunk:
        return cls(
            id=data["id"],
            doc_id=data["doc_id"],
            ordinal=int(data["ordinal"]),
            text=data["text"],
            embedding=tuple(float(x) for x in data.get("embedding") or ()),
        )


@dataclass(frozen=True)
class LabelDistribution:
    """Per-class scores over the taxonomy; always all 8 labels, summing to 1."""

    scores: tuple[tuple[MisinfoLabel, float], ...]

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.scores]
        if sorted(labels, key=taxonomy_index) != list(TAXONOMY) or len(labels) != len(TAXONOMY):
            raise ValueError("distribution must cover all 8 labels exactly once")
        total = sum(score for _, score in self.scores)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"distribution sums to {total!r}, expected 1")
        if any(score < -1e-12 or score > 1.0 + 1e-12 for _, score in self.scores):
            raise ValueError("scores must lie in [0, 1]")
        ordered = tuple(sorted(self.scores, key=lambda item: taxonomy_index(item[0])))
        object.__setattr__(self, "scores", ordered)

    @classmethod
    def from_mapping(cls, mapping: dict[MisinfoLabel, float]) -> LabelDistribution:
        return cls(tuple(mapping.items()))

    @classmethod
    def smoothed_one_hot(cls, label: MisinfoLabel, peak: float = 0.9) -> LabelDistribution:
        rest = (1.0 - peak) / (len(TAXONOMY) - 1)
        return cls.from_mapping({lab: (peak if lab is label else rest) for lab in TAXONOMY})

    @classmethod
    def point_mass(cls, label: MisinfoLabel) -> LabelDistribution:
        return cls.from_mapping({lab: (1.0 if lab is label else 0.0) for lab in TAXONOMY})

    def __getitem__(self, label: MisinfoLabel) -> float:
        for lab, score in self.scores:
            if lab is label:
                return score
        raise KeyError(label)

    def argmax(self) -> MisinfoLabel:
        """Highest-scoring label; ties resolved by taxonomy declaration order."""
        best = self.scores[0]
        for lab, score in self.scores[1:]:
            if score > best[1]:
                best = (lab, score)
        return best[0]

    def to_dict(self) -> dict[str, Any]:
        return {"scores": {lab.value: score for lab, score in sorted(self.scores, key=lambda i: i[0].value)}}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LabelDistribution:
        return cls.from_mapping({MisinfoLabel(k): float(v) for k, v in data["scores"].items()})


def mean_distribution(distributions: Iterable[LabelDistribution]) -> LabelDistribution:
    """Arithmetic mean of distributions, renormalized to sum exactly to 1."""
    dists = list(distributions)
    if not dists:
        raise ValueError("no distributions to average")
    sums = {lab: 0.0 for lab in TAXONOMY}
    for dist in dists:
        for lab, score in dist.scores:
            sums[lab] += score
    total = sum(sums.values())
    return LabelDistribution.from_mapping({lab: value / total for lab, value in sums.items()})


@dataclass(frozen=True)
class EvidenceItem:
    """A ranked chunk with authenticity and claim-alignment scores."""

    chunk_id: str
    doc_id: str
    authenticity: float
    alignment: float
    final_score: float
    rank: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "authenticity": self.authenticity,
            "alignment": self.alignment,
            "final_score": self.final_score,
            "rank": self.rank,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EvidenceItem:
        return cls(
            chunk_id=data["chunk_id"],
            doc_id=data["doc_id"],
            authenticity=float(data["authenticity"]),
            alignment=float(data["alignment"]),
            final_score=float(data["final_score"]),
            rank=int(data["rank"]),
        )


@dataclass(frozen=True)
class LineageNodeMeta:
    published_at: datetime
    modified_at: datetime | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "published_at": render_timestamp(self.published_at),
            "modified_at": None if self.modified_at is None else render_timestamp(self.modified_at),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LineageNodeMeta:
        modified = data.get("modified_at")
        return cls(
            published_at=parse_timestamp(data["published_at"]),
            modified_at=None if modified is None else parse_timestamp(modified),
        )


@dataclass(frozen=True)
class LineageGraph:
    """Timestamp-ordered similarity DAG over documents carrying one claim.

    Edges run from the earlier to the later document; ``origin_id`` is the
    node with the minimal publication timestamp (ties by lexicographic id).
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    origin_id: str
    node_meta: tuple[tuple[str, LineageNodeMeta], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: (e[0], e[1]))))
        object.__setattr__(self, "node_meta", tuple(sorted(self.node_meta, key=lambda m: m[0])))
        node_set = set(self.nodes)
        for src, dst, _ in self.edges:
            if src not in node_set or dst not in node_set:
                raise ValueError(f"edge ({src}, {dst}) references unknown node")
        if self.nodes and self.origin_id not in node_set:
            raise ValueError("origin_id not among nodes")

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": list(self.nodes),
            "edges": [[src, dst, sim] for src, dst, sim in self.edges],
            "origin_id": self.origin_id,
            "node_meta": {doc_id: meta.to_dict() for doc_id, meta in self.node_meta},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LineageGraph:
        return cls(
            nodes=tuple(data["nodes"]),
            edges=tuple((src, dst, float(sim)) for src, dst, sim in data["edges"]),
            origin_id=data["origin_id"],
            node_meta=tuple(
                (doc_id, LineageNodeMeta.from_dict(meta))
                for doc_id, meta in sorted((data.get("node_meta") or {}).items())
            ),
        )


@dataclass(frozen=True)
class Citation:
    doc_id: str
    url: str
    domain: str
    authenticity: float
    published_at: datetime

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "url": self.url,
            "domain": self.domain,
            "authenticity": self.authenticity,
            "published_at": render_timestamp(self.published_at),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Citation:
        return cls(
            doc_id=data["doc_id"],
            url=data["url"],
            domain=data["domain"],
            authenticity=float(data["authenticity"]),
            published_at=parse_timestamp(data["published_at"]),
        )


@dataclass(frozen=True)
class Correction:
    """A generated correction with authenticity-ordered citations."""

    claim_id: str
    label: MisinfoLabel
    corrected_statement: str
    citations: tuple[Citation, ...]
    confidence: float
    lineage: LineageGraph

    def __post_init__(self) -> None:
        object.__setattr__(self, "citations", tuple(self.citations))
        auths = [c.authenticity for c in self.citations]
        if any(a < b - 1e-12 for a, b in zip(auths, auths[1:])):
            raise ValueError("citations must be ordered by non-increasing authenticity")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim_id,
            "label": self.label.value,
            "corrected_statement": self.corrected_statement,
            "citations": [c.to_dict() for c in self.citations],
            "confidence": self.confidence,
            "lineage": self.lineage.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Correction:
        return cls(
            claim_id=data["claim_id"],
            label=MisinfoLabel(data["label"]),
            corrected_statement=data["corrected_statement"],
            citations=tuple(Citation.from_dict(c) for c in data["citations"]),
            confidence=float(data["confidence"]),
            lineage=LineageGraph.from_dict(data["lineage"]),
        )


class CheckName(str, Enum):
    CITATIONS_EXIST = "citations_exist"
    RELIABILITY_THRESHOLD = "reliability_threshold"
    LABEL_ALIGNMENT = "label_alignment"
    FORMAT_SPEC = "format_spec"
    LOGICAL_CONSISTENCY = "logical_consistency"
    TONE = "tone"


MANDATORY_CHECKS = frozenset(
    {
        CheckName.CITATIONS_EXIST,
        CheckName.RELIABILITY_THRESHOLD,
        CheckName.LABEL_ALIGNMENT,
        CheckName.FORMAT_SPEC,
    }
)


@dataclass(frozen=True)
class CheckResult:
    name: CheckName
    passed: bool
    mandatory: bool
    detail: str

    def __post_init__(self) -> None:
        if self.mandatory != (self.name in MANDATORY_CHECKS):
            raise ValueError(f"check {self.name.value} has wrong mandatory flag")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name.value,
            "passed": self.passed,
            "mandatory": self.mandatory,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CheckResult:
        return cls(
            name=CheckName(data["name"]),
            passed=bool(data["passed"]),
            mandatory=bool(data["mandatory"]),
            detail=data["detail"],
        )


def make_check(name: CheckName, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=passed, mandatory=name in MANDATORY_CHECKS, detail=detail)


@dataclass(frozen=True)
class VerificationReport:
    claim_id: str
    checks: tuple[CheckResult, ...]
    verdict: Verdict
    final_text: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim_id,
            "checks": [c.to_dict() for c in self.checks],
            "verdict": self.verdict.value,
            "final_text": self.final_text,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> VerificationReport:
        return cls(
            claim_id=data["claim_id"],
            checks=tuple(CheckResult.from_dict(c) for c in data["checks"]),
            verdict=Verdict(data["verdict"]),
            final_text=data["final_text"],
        )


@dataclass(frozen=True)
class AgentMessage:
    """One hop of inter-agent communication, wrapped for the audit chain."""

    message_id: str
    correlation_id: str
    sender: str
    recipient: str
    stage: Stage
    payload_kind: str
    payload: bytes
    sent_at: datetime
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "message_id": self.message_id,
            "correlation_id": self.correlation_id,
            "sender": self.sender,
            "recipient": self.recipient,
            "stage": self.stage.value,
            "payload_kind": self.payload_kind,
            "payload": base64.b64encode(self.payload).decode("ascii"),
            "sent_at": render_timestamp(self.sent_at),
            "schema_version": self.schema_version,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AgentMessage:
        return cls(
            message_id=data["message_id"],
            correlation_id=data["correlation_id"],
            sender=data["sender"],
            recipient=data["recipient"],
            stage=Stage(data["stage"]),
            payload_kind=data["payload_kind"],
            payload=base64.b64decode(data["payload"]),
            sent_at=parse_timestamp(data["sent_at"]),
            schema_version=int(data["schema_version"]),
        )


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    prev_hash: str
    payload_hash: str
    message: AgentMessage

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "prev_hash": self.prev_hash,
            "payload_hash": self.payload_hash,
            "message": self.message.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AuditRecord:
        return cls(
            seq=int(data["seq"]),
            prev_hash=data["prev_hash"],
            payload_hash=data["payload_hash"],
            message=AgentMessage.from_dict(data["message"]),
        )


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------

_CANONICAL_TYPES = (
    Claim,
    UserInstructions,
    Document,
    Chunk,
    LabelDistribution,
    EvidenceItem,
    LineageGraph,
    Citation,
    Correction,
    CheckResult,
    VerificationReport,
    AgentMessage,
    AuditRecord,
)


def canonical_json(data: Any) -> str:
    """Compact JSON with the dict orderings produced by ``to_dict``."""
    return json.dumps(data, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def canonical_bytes(value: Any) -> bytes:
    """Deterministic byte serialization of any domain value."""
    if not isinstance(value, _CANONICAL_TYPES):
        raise TypeError(f"not a canonical domain type: {type(value).__name__}")
    return canonical_json(value.to_dict()).encode("utf-8")


def from_canonical_bytes(cls: type, data: bytes) -> Any:
    if not (isinstance(cls, type) and issubclass(cls, _CANONICAL_TYPES)):
        raise TypeError(f"not a canonical domain type: {cls!r}")
    return cls.from_dict(json.loads(data.decode("utf-8")))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


_UUID_RE = re.compile(r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$")


def is_uuid_string(value: str) -> bool:
    return bool(_UUID_RE.match(value.lower()))

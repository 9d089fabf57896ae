"""Indexer agent: normalization, chunking, embedding, BM25 + vector indices.

The index is exact: both query paths match brute-force oracles. Embeddings
come from a deterministic feature-hashing embedder so the whole pipeline runs
offline; remote embedders can be plugged in as long as they return unit
vectors of the configured dimension.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .domain import (
    Chunk,
    ContentKind,
    Document,
    DomainError,
    parse_timestamp,
    render_timestamp,
    sha256_hex,
    validate_document,
)

logger = logging.getLogger(__name__)

INDEX_SCHEMA_VERSION = 1

DEFAULT_DIM = 256
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?]) ")


class IndexError_(DomainError):
    """Base class for index failures."""


class DecodeError(IndexError_):
    pass


class EmptyDocumentError(IndexError_):
    pass


class DuplicateDocumentError(IndexError_):
    pass


class EmptyQueryError(IndexError_):
    pass


class EmptyIndexError(IndexError_):
    pass


class DimensionMismatchError(IndexError_):
    pass


class VersionMismatchError(IndexError_):
    pass


class CorruptIndexError(IndexError_):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; no stemming."""
    return _TOKEN_RE.findall(text.lower())


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

class _TextExtractor(HTMLParser):
    """Collects text content, dropping script and style subtrees."""

    _SKIP = {"script", "style"}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag: str) -> None:
        if tag in self._SKIP and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data: str) -> None:
        if self._skip_depth == 0:
            self.parts.append(data)


def _collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def html_to_text(markup: str) -> str:
    parser = _TextExtractor()
    parser.feed(markup)
    parser.close()
    return _collapse_whitespace(" ".join(parser.parts))


PdfExtractor = Callable[[bytes], str]


def normalize_document(
    raw: bytes,
    content_kind: ContentKind,
    *,
    doc_id: str,
    url: str,
    domain: str,
    title: str,
    published_at: datetime,
    author: str | None = None,
    modified_at: datetime | None = None,
    pdf_extractor: PdfExtractor | None = None,
) -> Document:
    """Produce a Document whose body is plain UTF-8 text with collapsed whitespace."""
    if content_kind is ContentKind.PDF:
        if pdf_extractor is None:
            raise DecodeError("pdf content requires a plugged text extractor")
        text = pdf_extractor(raw)
    else:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"document {doc_id} is not valid UTF-8") from exc
        if content_kind is ContentKind.HTML:
            text = html_to_text(text)
    body = _collapse_whitespace(text)
    if not body:
        raise EmptyDocumentError(f"document {doc_id} is empty after normalization")
    return Document(
        id=doc_id,
        url=url,
        domain=domain.lower(),
        title=title,
        author=author,
        published_at=published_at,
        modified_at=modified_at,
        body=body,
        content_kind=content_kind,
    )


# ---------------------------------------------------------------------------
# Chunking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChunkingPolicy:
    kind: str = "fixed"  # "fixed" | "sentence"
    target_tokens: int = 200
    overlap_tokens: int = 40

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "sentence"):
            raise ValueError(f"unknown chunking kind {self.kind!r}")
        if self.target_tokens < 1:
            raise ValueError("target_tokens must be positive")
        if not 0 <= self.overlap_tokens < self.target_tokens:
            raise ValueError("overlap_tokens must satisfy 0 <= overlap < target")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "target_tokens": self.target_tokens,
            "overlap_tokens": self.overlap_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ChunkingPolicy:
        return cls(
            kind=data.get("kind", "fixed"),
            target_tokens=int(data.get("target_tokens", 200)),
            overlap_tokens=int(data.get("overlap_tokens", 40)),
        )


def chunk_id_for(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}#{ordinal}"


def chunk_document(doc: Document, policy: ChunkingPolicy) -> list[Chunk]:
    """Split a document body into chunks (embeddings are filled in later).

    Fixed mode slides a window of ``target_tokens`` whitespace tokens stepping
    by ``target_tokens - overlap_tokens``; sentence mode greedily packs
    sentence spans up to the target. The last chunk may be short.
    """
    words = doc.body.split()
    spans: list[list[str]] = []
    if policy.kind == "fixed":
        step = policy.target_tokens - policy.overlap_tokens
        start = 0
        while start < len(words):
            spans.append(words[start : start + policy.target_tokens])
            start += step
    else:
        sentences = [s for s in _SENTENCE_SPLIT_RE.split(doc.body) if s]
        current: list[str] = []
        for sentence in sentences:
            sent_words = sentence.split()
            if current and len(current) + len(sent_words) > policy.target_tokens:
                spans.append(current)
                current = []
            current.extend(sent_words)
        if current:
            spans.append(current)
    return [
        Chunk(id=chunk_id_for(doc.id, i), doc_id=doc.id, ordinal=i, text=" ".join(span))
        for i, span in enumerate(spans)
    ]


# ---------------------------------------------------------------------------
# Embedding
# ---------------------------------------------------------------------------

def stable_token_hash(token: str) -> int:
    """First 8 bytes of SHA-256(token) as a big-endian unsigned integer."""
    return int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")


class HashEmbedder:
    """Deterministic feature-hashing embedder producing unit vectors.

    Each token lands at index ``stable_token_hash(token) mod dim`` with sign
    taken from the hash's parity bit (XOR of its 64 bits), accumulating
    sign * term-frequency, then L2-normalizing. Token-free text maps to the
    zero vector.
    """

    def __init__(self, dim: int = DEFAULT_DIM) -> None:
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._slots: dict[str, tuple[int, float]] = {}

    def _slot(self, token: str) -> tuple[int, float]:
        cached = self._slots.get(token)
        if cached is None:
            h = stable_token_hash(token)
            sign = 1.0 if bin(h).count("1") % 2 == 0 else -1.0
            cached = (h % self.dim, sign)
            self._slots[token] = cached
        return cached

    def embed_array(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        counts = Counter(tokenize(text))
        for token, tf in counts.items():
            idx, sign = self._slot(token)
            vec[idx] += sign * tf
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec

    def embed(self, text: str) -> tuple[float, ...]:
        return tuple(float(x) for x in self.embed_array(text))


Embedder = Callable[[str], Sequence[float]]


# ---------------------------------------------------------------------------
# Source profiles and authenticity
# ---------------------------------------------------------------------------

@dataclass
class SourceProfile:
    domain: str
    reputation: float = 0.5
    citation_count: int = 0
    last_seen: datetime | None = None
    category: str = "other"

    def to_dict(self) -> dict[str, Any]:
        return {
            "domain": self.domain,
            "reputation": self.reputation,
            "citation_count": self.citation_count,
            "last_seen": None if self.last_seen is None else render_timestamp(self.last_seen),
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SourceProfile:
        last_seen = data.get("last_seen")
        return cls(
            domain=data["domain"],
            reputation=float(data.get("reputation", 0.5)),
            citation_count=int(data.get("citation_count", 0)),
            last_seen=None if last_seen is None else parse_timestamp(last_seen),
            category=data.get("category", "other"),
        )


AUTH_WEIGHTS = (0.5, 0.25, 0.25)  # reputation, recency, citations
CITATION_HALF_COUNT = 10
RECENCY_SCALE_DAYS = 365.0


def authenticity(profile: SourceProfile, doc: Document, now: datetime) -> float:
    """Trust score: w_rep*reputation + w_rec*exp(-age/365d) + w_cit*c/(c+10)."""
    w_rep, w_rec, w_cit = AUTH_WEIGHTS
    age_days = max(0.0, (now - doc.published_at).total_seconds() / 86400.0)
    recency = math.exp(-age_days / RECENCY_SCALE_DAYS)
    cit_norm = profile.citation_count / (profile.citation_count + CITATION_HALF_COUNT)
    score = w_rep * profile.reputation + w_rec * recency + w_cit * cit_norm
    return min(1.0, max(0.0, score))


def load_reputation_table(path: str | Path) -> dict[str, dict[str, Any]]:
    """Read the operator reputation table.

    Values may be a bare reputation number or an object
    ``{reputation, category?, citation_count?}``; unknown domains default to
    reputation 0.5 and category "other" at lookup time.
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    table: dict[str, dict[str, Any]] = {}
    for domain, value in raw.items():
        if isinstance(value, (int, float)):
            entry: dict[str, Any] = {"reputation": float(value)}
        else:
            entry = dict(value)
        entry.setdefault("category", "other")
        entry.setdefault("citation_count", 0)
        table[domain.lower()] = entry
    return table


@dataclass(frozen=True)
class IndexStats:
    n_docs: int
    n_chunks: int
    avg_chunk_len_tokens: float
    vocabulary_size: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_docs": self.n_docs,
            "n_chunks": self.n_chunks,
            "avg_chunk_len_tokens": self.avg_chunk_len_tokens,
            "vocabulary_size": self.vocabulary_size,
        }


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


@dataclass(frozen=True)
class AddReport:
    doc_id: str
    chunk_count: int


# ---------------------------------------------------------------------------
# The index
# ---------------------------------------------------------------------------

class DocumentIndex:
    """Dual BM25/vector index over chunks with per-domain source profiles.

    Concurrency: many readers, single writer. A coarse RLock serializes
    mutation; queries snapshot under the same lock so readers never observe a
    half-applied add.
    """

    def __init__(
        self,
        dim: int = DEFAULT_DIM,
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
        policy: ChunkingPolicy | None = None,
        reputation: dict[str, dict[str, Any]] | None = None,
        embedder: Embedder | None = None,
    ) -> None:
        self.dim = dim
        self.k1 = k1
        self.b = b
        self.policy = policy or ChunkingPolicy()
        self.reputation = {k.lower(): dict(v) for k, v in (reputation or {}).items()}
        self._hash_embedder = HashEmbedder(dim)
        self._embedder = embedder
        self.docs: dict[str, Document] = {}
        self.chunks: dict[str, Chunk] = {}
        self.profiles: dict[str, SourceProfile] = {}
        self._postings: dict[str, dict[str, int]] = {}
        self._chunk_len: dict[str, int] = {}
        self._doc_chunk_ids: dict[str, list[str]] = {}
        self._ordered_chunk_ids: list[str] | None = None
        self._matrix: np.ndarray | None = None
        self._doc_ids_ordered: list[str] | None = None
        self._doc_matrix: np.ndarray | None = None
        self._lock = threading.RLock()

    # -- embedding ----------------------------------------------------------

    def embed(self, text: str) -> np.ndarray:
        if self._embedder is not None:
            vec = np.asarray(self._embedder(text), dtype=np.float64)
            if vec.shape != (self.dim,):
                raise DimensionMismatchError(
                    f"plugged embedder returned dimension {vec.shape}, expected ({self.dim},)"
                )
            return vec
        return self._hash_embedder.embed_array(text)

    # -- mutation ------------------------------------------------------------

    def _profile_for(self, domain: str) -> SourceProfile:
        entry = self.reputation.get(domain, {})
        return SourceProfile(
            domain=domain,
            reputation=float(entry.get("reputation", 0.5)),
            citation_count=int(entry.get("citation_count", 0)),
            category=entry.get("category", "other"),
        )

    def add(self, doc: Document, policy: ChunkingPolicy | None = None) -> AddReport:
        violations = validate_document(doc)
        if violations:
            raise IndexError_(f"document {doc.id} invalid: {'; '.join(violations)}")
        with self._lock:
            if doc.id in self.docs:
                raise DuplicateDocumentError(f"document id {doc.id} already indexed")
            chunks = chunk_document(doc, policy or self.policy)
            embedded: list[Chunk] = []
            for chunk in chunks:
                vec = self.embed(chunk.text)
                embedded.append(
                    Chunk(
                        id=chunk.id,
                        doc_id=chunk.doc_id,
                        ordinal=chunk.ordinal,
                        text=chunk.text,
                        embedding=tuple(float(x) for x in vec),
                    )
                )
            self.docs[doc.id] = doc
            self._doc_chunk_ids[doc.id] = []
            for chunk in embedded:
                self.chunks[chunk.id] = chunk
                self._doc_chunk_ids[doc.id].append(chunk.id)
                terms = tokenize(chunk.text)
                self._chunk_len[chunk.id] = len(terms)
                for term, tf in Counter(terms).items():
                    self._postings.setdefault(term, {})[chunk.id] = tf
            profile = self.profiles.get(doc.domain)
            if profile is None:
                profile = self._profile_for(doc.domain)
                self.profiles[doc.domain] = profile
            if profile.last_seen is None or doc.published_at > profile.last_seen:
                profile.last_seen = doc.published_at
            self._ordered_chunk_ids = None
            self._matrix = None
            self._doc_ids_ordered = None
            self._doc_matrix = None
            return AddReport(doc_id=doc.id, chunk_count=len(embedded))

    def add_many(self, docs: Iterable[Document]) -> list[AddReport]:
        return [self.add(doc) for doc in docs]

    # -- stats ---------------------------------------------------------------

    def stats(self) -> IndexStats:
        with self._lock:
            n_chunks = len(self.chunks)
            total_len = sum(self._chunk_len.values())
            return IndexStats(
                n_docs=len(self.docs),
                n_chunks=n_chunks,
                avg_chunk_len_tokens=(total_len / n_chunks) if n_chunks else 0.0,
                vocabulary_size=len(self._postings),
            )

    # -- queries -------------------------------------------------------------

    def _chunk_sort_key(self, chunk_id: str) -> tuple[str, int]:
        chunk = self.chunks[chunk_id]
        return (chunk.doc_id, chunk.ordinal)

    def bm25_query(self, terms: Sequence[str], k: int) -> list[ScoredChunk]:
        """Okapi BM25 over chunks; repeated query terms accumulate.

        idf = ln(1 + (N - n + 0.5)/(n + 0.5)); ties broken by
        (doc_id, ordinal) ascending; only chunks containing at least one query
        term are candidates, matching the exhaustive oracle.
        """
        if not terms:
            raise EmptyQueryError("bm25 query has no terms")
        with self._lock:
            if not self.chunks:
                raise EmptyIndexError("index is empty")
            n_chunks = len(self.chunks)
            avgdl = sum(self._chunk_len.values()) / n_chunks
            scores: dict[str, float] = {}
            for term in terms:
                postings = self._postings.get(term)
                if not postings:
                    continue
                df = len(postings)
                idf = math.log(1.0 + (n_chunks - df + 0.5) / (df + 0.5))
                for chunk_id, tf in postings.items():
                    dl = self._chunk_len[chunk_id]
                    part = idf * (tf * (self.k1 + 1.0)) / (
                        tf + self.k1 * (1.0 - self.b + self.b * dl / avgdl)
                    )
                    scores[chunk_id] = scores.get(chunk_id, 0.0) + part
            ranked = sorted(
                scores.items(), key=lambda item: (-item[1], self._chunk_sort_key(item[0]))
            )
            return [ScoredChunk(self.chunks[cid], score) for cid, score in ranked[:k]]

    def _ordered_ids_and_matrix(self) -> tuple[list[str], np.ndarray]:
        if self._ordered_chunk_ids is None or self._matrix is None:
            ids = sorted(self.chunks, key=self._chunk_sort_key)
            matrix = np.zeros((len(ids), self.dim), dtype=np.float64)
            for row, cid in enumerate(ids):
                matrix[row, :] = self.chunks[cid].embedding
            self._ordered_chunk_ids = ids
            self._matrix = matrix
        return self._ordered_chunk_ids, self._matrix

    def vector_query(self, query_vec: Sequence[float], k: int) -> list[ScoredChunk]:
        """Exact top-k by cosine; ties broken by (doc_id, ordinal) ascending."""
        vec = np.asarray(query_vec, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatchError(f"query dimension {vec.shape} != ({self.dim},)")
        with self._lock:
            if not self.chunks:
                raise EmptyIndexError("index is empty")
            ids, matrix = self._ordered_ids_and_matrix()
            sims = matrix @ vec
            order = sorted(range(len(ids)), key=lambda i: (-sims[i], self._chunk_sort_key(ids[i])))
            top = order[: min(k, len(ids))]
            return [ScoredChunk(self.chunks[ids[i]], float(sims[i])) for i in top]

    # -- documents and lineage support ---------------------------------------

    def get_doc(self, doc_id: str) -> Document | None:
        return self.docs.get(doc_id)

    def get_chunk(self, chunk_id: str) -> Chunk | None:
        return self.chunks.get(chunk_id)

    def doc_vector(self, doc_id: str) -> np.ndarray:
        """Document-level vector: mean of its chunk embeddings."""
        with self._lock:
            chunk_ids = self._doc_chunk_ids.get(doc_id)
            if not chunk_ids:
                raise IndexError_(f"document {doc_id} not indexed")
            rows = np.array([self.chunks[cid].embedding for cid in chunk_ids], dtype=np.float64)
            return rows.mean(axis=0)

    def doc_ids_and_matrix(self) -> tuple[list[str], np.ndarray]:
        """All doc ids (sorted) with their mean-chunk vectors, row-aligned."""
        with self._lock:
            if self._doc_ids_ordered is None or self._doc_matrix is None:
                ids = sorted(self.docs)
                matrix = np.zeros((len(ids), self.dim), dtype=np.float64)
                for row, doc_id in enumerate(ids):
                    matrix[row, :] = self.doc_vector(doc_id)
                self._doc_ids_ordered = ids
                self._doc_matrix = matrix
            return self._doc_ids_ordered, self._doc_matrix

    def authenticity_for(self, doc_id: str, now: datetime) -> float:
        doc = self.docs[doc_id]
        profile = self.profiles.get(doc.domain) or self._profile_for(doc.domain)
        return authenticity(profile, doc, now)

    def category_of(self, domain: str) -> str:
        profile = self.profiles.get(domain)
        if profile is not None:
            return profile.category
        return self.reputation.get(domain, {}).get("category", "other")

    # -- persistence -----------------------------------------------------------

    _DATA_FILES = ("documents.jsonl", "chunks.jsonl", "embeddings.npy", "postings.json", "profiles.json")

    def persist(self, path: str | Path) -> Path:
        """Write the index to a directory with a checksummed manifest."""
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        with self._lock:
            doc_ids = sorted(self.docs)
            with (root / "documents.jsonl").open("w", encoding="utf-8") as fh:
                for doc_id in doc_ids:
                    fh.write(json.dumps(self.docs[doc_id].to_dict(), ensure_ascii=False) + "\n")
            chunk_ids, matrix = self._ordered_ids_and_matrix()
            with (root / "chunks.jsonl").open("w", encoding="utf-8") as fh:
                for cid in chunk_ids:
                    chunk = self.chunks[cid]
                    row = {"id": chunk.id, "doc_id": chunk.doc_id, "ordinal": chunk.ordinal, "text": chunk.text}
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            np.save(root / "embeddings.npy", matrix)
            postings_out = {
                term: sorted(postings.items())
                for term, postings in sorted(self._postings.items())
            }
            (root / "postings.json").write_text(
                json.dumps(postings_out, ensure_ascii=False), encoding="utf-8"
            )
            profiles_out = {dom: prof.to_dict() for dom, prof in sorted(self.profiles.items())}
            (root / "profiles.json").write_text(
                json.dumps(profiles_out, ensure_ascii=False), encoding="utf-8"
            )
            checksums = {name: sha256_hex((root / name).read_bytes()) for name in self._DATA_FILES}
            manifest = {
                "schema_version": INDEX_SCHEMA_VERSION,
                "dim": self.dim,
                "k1": self.k1,
                "b": self.b,
                "policy": self.policy.to_dict(),
                "checksums": checksums,
                "n_docs": len(self.docs),
                "n_chunks": len(self.chunks),
            }
            (root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        logger.info("persisted index to %s (%d docs, %d chunks)", root, len(self.docs), len(self.chunks))
        return root

    @classmethod
    def load(cls, path: str | Path, reputation: dict[str, dict[str, Any]] | None = None) -> DocumentIndex:
        """Load a persisted index, verifying schema version and checksums."""
        root = Path(path)
        manifest_path = root / "manifest.json"
        if not manifest_path.exists():
            raise CorruptIndexError(f"no manifest at {root}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        version = manifest.get("schema_version")
        if version != INDEX_SCHEMA_VERSION:
            raise VersionMismatchError(f"index schema_version {version}, expected {INDEX_SCHEMA_VERSION}")
        for name, expected in manifest["checksums"].items():
            target = root / name
            if not target.exists():
                raise CorruptIndexError(f"missing index file {name}")
            actual = sha256_hex(target.read_bytes())
            if actual != expected:
                raise CorruptIndexError(f"checksum mismatch for {name}")
        index = cls(
            dim=int(manifest["dim"]),
            k1=float(manifest["k1"]),
            b=float(manifest["b"]),
            policy=ChunkingPolicy.from_dict(manifest["policy"]),
            reputation=reputation,
        )
        with (root / "documents.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                doc = Document.from_dict(json.loads(line))
                index.docs[doc.id] = doc
                index._doc_chunk_ids[doc.id] = []
        chunk_rows = []
        with (root / "chunks.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                chunk_rows.append(json.loads(line))
        matrix = np.load(root / "embeddings.npy")
        if matrix.shape != (len(chunk_rows), index.dim):
            raise CorruptIndexError("embeddings matrix shape does not match chunk count")
        for row, data in zip(matrix, chunk_rows):
            chunk = Chunk(
                id=data["id"],
                doc_id=data["doc_id"],
                ordinal=int(data["ordinal"]),
                text=data["text"],
                embedding=tuple(float(x) for x in row),
            )
            if chunk.doc_id not in index.docs:
                raise CorruptIndexError(f"chunk {chunk.id} references unknown document")
            index.chunks[chunk.id] = chunk
            index._doc_chunk_ids[chunk.doc_id].append(chunk.id)
            index._chunk_len[chunk.id] = len(tokenize(chunk.text))
        for doc_id in index._doc_chunk_ids:
            index._doc_chunk_ids[doc_id].sort(key=lambda cid: index.chunks[cid].ordinal)
        postings = json.loads((root / "postings.json").read_text(encoding="utf-8"))
        index._postings = {
            term: {cid: int(tf) for cid, tf in entries} for term, entries in postings.items()
        }
        profiles = json.loads((root / "profiles.json").read_text(encoding="utf-8"))
        index.profiles = {dom: SourceProfile.from_dict(p) for dom, p in profiles.items()}
        return index

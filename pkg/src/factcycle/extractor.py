"""Extractor agent: type-aware retrieval, rank fusion, re-ranking, lineage.

Retrieval runs BM25 and vector search side by side and fuses them with
Reciprocal Rank Fusion. Re-ranking blends claim alignment, source
authenticity, and the label-driven category boost. Lineage walks the indexed
corpus for documents similar to a seed and orders them by publication time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .domain import (
    Claim,
    DomainError,
    EvidenceItem,
    LineageGraph,
    LineageNodeMeta,
    MisinfoLabel,
)
from .indexer import DocumentIndex, ScoredChunk, tokenize


class SeedNotFoundError(DomainError):
    """The lineage seed document is not in the index."""


SOURCE_CATEGORIES = ("news", "statistics", "science", "history", "factcheck", "government", "other")

# Routing table: classified label -> category boosts for retrieval re-ranking.
CATEGORY_ROUTES: dict[MisinfoLabel, dict[str, float]] = {
    MisinfoLabel.STATISTICAL_ERROR: {"statistics": 1.0, "government": 0.5},
    MisinfoLabel.HISTORICAL_MANIPULATION: {"history": 1.0, "science": 0.3},
    MisinfoLabel.FACTUAL_ERROR: {"factcheck": 1.0, "news": 0.5},
    MisinfoLabel.MISREPRESENTATION: {"factcheck": 1.0, "news": 0.5},
    MisinfoLabel.PROPAGANDA: {"factcheck": 0.7, "news": 0.7},
    MisinfoLabel.CHERRY_PICKING: {"factcheck": 0.7, "news": 0.7},
    MisinfoLabel.LOGICAL_FALLACY: {"factcheck": 0.7, "news": 0.7},
    MisinfoLabel.NOT_MISINFORMATION: {},
}


@dataclass(frozen=True)
class RankingWeights:
    alpha: float = 0.5  # alignment
    beta: float = 0.3  # authenticity
    gamma: float = 0.2  # category boost
    rrf_k: int = 60
    tau_lineage: float = 0.80

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("alpha + beta + gamma must sum to 1")
        if self.rrf_k < 1:
            raise ValueError("rrf_k must be >= 1")
        if not 0.0 < self.tau_lineage <= 1.0:
            raise ValueError("tau_lineage must lie in (0, 1]")


@dataclass(frozen=True)
class QueryPlan:
    claim_terms: tuple[str, ...]
    label: MisinfoLabel
    category_boosts: dict[str, float] = field(default_factory=dict)
    k: int = 20
    claim_text: str = ""  # raw claim text, embedded for the vector side

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("retrieval depth k must be >= 1")
        if any(v < 0 for v in self.category_boosts.values()):
            raise ValueError("category boosts must be non-negative")

    def with_k(self, k: int) -> QueryPlan:
        return QueryPlan(
            claim_terms=self.claim_terms,
            label=self.label,
            category_boosts=dict(self.category_boosts),
            k=k,
            claim_text=self.claim_text,
        )


def plan_query(claim: Claim, label: MisinfoLabel, k: int = 20) -> QueryPlan:
    """Tokenized claim plus topic hints, with the label's category boosts."""
    terms = tokenize(claim.text)
    for hint in claim.topic_hints:
        terms.extend(tokenize(hint))
    return QueryPlan(
        claim_terms=tuple(terms),
        label=label,
        category_boosts=dict(CATEGORY_ROUTES[label]),
        k=k,
        claim_text=claim.text,
    )


def rrf_fuse(
    ranked_lists: list[list[str]], rrf_k: int, sort_key
) -> list[tuple[str, float]]:
    """Reciprocal Rank Fusion: score(c) = sum over lists of 1/(rrf_k + rank)."""
    scores: dict[str, float] = {}
    for ranked in ranked_lists:
        for position, key in enumerate(ranked, start=1):
            scores[key] = scores.get(key, 0.0) + 1.0 / (rrf_k + position)
    return sorted(scores.items(), key=lambda item: (-item[1], sort_key(item[0])))


def retrieve(plan: QueryPlan, weights: RankingWeights, index: DocumentIndex) -> list[ScoredChunk]:
    """Hybrid retrieval: BM25 and cosine lists fused by RRF.

    Candidates absent from one list simply contribute nothing for it. The
    fused order breaks ties by (doc_id, ordinal).
    """
    bm25 = index.bm25_query(list(plan.claim_terms), plan.k)
    vector = index.vector_query(index.embed(plan.claim_text), plan.k)
    fused = rrf_fuse(
        [[sc.chunk.id for sc in bm25], [sc.chunk.id for sc in vector]],
        weights.rrf_k,
        sort_key=lambda cid: (index.chunks[cid].doc_id, index.chunks[cid].ordinal),
    )
    return [ScoredChunk(index.chunks[cid], score) for cid, score in fused]


def rerank(
    claim: Claim,
    candidates: list[ScoredChunk],
    weights: RankingWeights,
    index: DocumentIndex,
    plan: QueryPlan,
    now: datetime | None = None,
) -> list[EvidenceItem]:
    """Score candidates by alignment, authenticity, and category boost.

    final = alpha*((alignment+1)/2) + beta*authenticity + gamma*boost_ratio,
    where alignment is the cosine between the claim and chunk embeddings and
    boost_ratio normalizes the plan's category boost by its maximum.
    """
    if not candidates:
        return []
    reference_time = now or claim.received_at
    claim_vec = index.embed(claim.text)
    max_boost = max(plan.category_boosts.values(), default=0.0)
    scored: list[tuple[float, float, float, ScoredChunk]] = []
    for candidate in candidates:
        chunk = candidate.chunk
        alignment = float(np.dot(claim_vec, np.asarray(chunk.embedding)))
        auth = index.authenticity_for(chunk.doc_id, reference_time)
        doc = index.docs[chunk.doc_id]
        boost = plan.category_boosts.get(index.category_of(doc.domain), 0.0)
        boost_ratio = boost / max_boost if max_boost > 0 else 0.0
        final = (
            weights.alpha * ((alignment + 1.0) / 2.0)
            + weights.beta * auth
            + weights.gamma * boost_ratio
        )
        scored.append((final, alignment, auth, candidate))
    scored.sort(key=lambda row: (-row[0], row[3].chunk.doc_id, row[3].chunk.ordinal))
    return [
        EvidenceItem(
            chunk_id=cand.chunk.id,
            doc_id=cand.chunk.doc_id,
            authenticity=auth,
            alignment=alignment,
            final_score=final,
            rank=position,
        )
        for position, (final, alignment, auth, cand) in enumerate(scored, start=1)
    ]


def trace_lineage(index: DocumentIndex, seed_doc_id: str, tau: float) -> LineageGraph:
    """Similarity DAG around a seed document.

    Nodes are documents whose mean-chunk cosine to the seed is >= tau; edges
    connect node pairs with pairwise similarity >= tau, directed from the
    earlier (published_at, id) to the later. The origin is the node with the
    minimal published_at, ties by lexicographic id.
    """
    if index.get_doc(seed_doc_id) is None:
        raise SeedNotFoundError(f"seed document {seed_doc_id} not in index")
    doc_ids, matrix = index.doc_ids_and_matrix()
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = matrix / safe[:, None]
    seed_row = doc_ids.index(seed_doc_id)
    sims_to_seed = unit @ unit[seed_row]
    node_rows = [i for i in range(len(doc_ids)) if sims_to_seed[i] >= tau]
    nodes = [doc_ids[i] for i in node_rows]
    order_key = {
        doc_id: (index.docs[doc_id].published_at, doc_id) for doc_id in nodes
    }
    edges: list[tuple[str, str, float]] = []
    for a_pos, i in enumerate(node_rows):
        for j in node_rows[a_pos + 1 :]:
            sim = float(np.dot(unit[i], unit[j]))
            if sim < tau:
                continue
            a, b = doc_ids[i], doc_ids[j]
            if order_key[a] <= order_key[b]:
                edges.append((a, b, sim))
            else:
                edges.append((b, a, sim))
    origin = min(nodes, key=lambda doc_id: order_key[doc_id])
    meta = tuple(
        (
            doc_id,
            LineageNodeMeta(
                published_at=index.docs[doc_id].published_at,
                modified_at=index.docs[doc_id].modified_at,
            ),
        )
        for doc_id in sorted(nodes)
    )
    return LineageGraph(nodes=tuple(nodes), edges=tuple(edges), origin_id=origin, node_meta=meta)


@dataclass(frozen=True)
class EvidenceBundle:
    """Everything the extractor hands to the corrector."""

    plan: QueryPlan
    evidence: tuple[EvidenceItem, ...]
    lineage: LineageGraph

    def to_dict(self) -> dict:
        return {
            "plan": {
                "claim_terms": list(self.plan.claim_terms),
                "label": self.plan.label.value,
                "category_boosts": dict(sorted(self.plan.category_boosts.items())),
                "k": self.plan.k,
            },
            "evidence": [e.to_dict() for e in self.evidence],
            "lineage": self.lineage.to_dict(),
        }


class ExtractorAgent:
    def __init__(self, index: DocumentIndex, weights: RankingWeights, k: int = 20) -> None:
        self.index = index
        self.weights = weights
        self.k = k

    def extract(self, claim: Claim, label: MisinfoLabel, now: datetime | None = None) -> EvidenceBundle:
        plan = plan_query(claim, label, self.k)
        candidates = retrieve(plan, self.weights, self.index)
        evidence = rerank(claim, candidates, self.weights, self.index, plan, now=now)
        if evidence:
            seed = evidence[0].doc_id
            lineage = trace_lineage(self.index, seed, self.weights.tau_lineage)
        else:
            lineage = LineageGraph(nodes=(), edges=(), origin_id="", node_meta=())
        return EvidenceBundle(plan=plan, evidence=tuple(evidence), lineage=lineage)

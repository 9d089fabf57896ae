"""Corrector agent: cross-validation, conditional expansion, correction text.

Every evidence chunk gets a stance (supports / contradicts / neutral) from a
reasoning backend, with a deterministic cosine + negation-marker rule as the
fallback so the pipeline never aborts offline. For a misinformation claim the
evidence that contradicts it is what validates the correction, so citations
and the independent-domain count are drawn from the contradicting side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .backends import Backend, BackendError, ChatRequest
from .domain import (
    Citation,
    Claim,
    Correction,
    Document,
    EvidenceItem,
    LineageGraph,
    MisinfoLabel,
    UserInstructions,
)
from .extractor import QueryPlan, RankingWeights, rerank, retrieve
from .indexer import DocumentIndex, DuplicateDocumentError, tokenize

logger = logging.getLogger(__name__)

NEGATION_MARKERS = frozenset(
    {"not", "no", "never", "none", "false", "without", "deny", "denies", "denied"}
)


class Stance(str, Enum):
    SUPPORTS = "supports"
    CONTRADICTS = "contradicts"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class CorrectionPolicy:
    theta_min_authenticity: float = 0.6
    n_min_independent: int = 2
    k_expand_factor: int = 2
    k_max: int = 80
    external_search_enabled: bool = False
    stance_agree_threshold: float = 0.55

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_min_authenticity <= 1.0:
            raise ValueError("theta_min_authenticity must lie in [0, 1]")
        if self.n_min_independent < 1:
            raise ValueError("n_min_independent must be >= 1")
        if self.k_expand_factor < 2:
            raise ValueError("k_expand_factor must be >= 2")


@dataclass(frozen=True)
class SupportAssessment:
    supporting: tuple[EvidenceItem, ...]
    contradicting: tuple[EvidenceItem, ...]
    independent_domains: int
    expanded: bool = False
    stance_fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "supporting": [e.to_dict() for e in self.supporting],
            "contradicting": [e.to_dict() for e in self.contradicting],
            "independent_domains": self.independent_domains,
            "expanded": self.expanded,
            "stance_fallback": self.stance_fallback,
        }


class ExternalSearchClient(Protocol):
    """Pluggable external search: terms in, Documents out."""

    def search(self, terms: Sequence[str], max_results: int) -> list[Document]: ...


def _has_negation(text: str) -> bool:
    return bool(NEGATION_MARKERS.intersection(tokenize(text)))


def rule_stance(claim: Claim, chunk_text: str, chunk_embedding: Sequence[float],
                index: DocumentIndex, threshold: float) -> Stance:
    """Deterministic fallback: high cosine with no negation mismatch supports."""
    cosine = float(np.dot(index.embed(claim.text), np.asarray(chunk_embedding)))
    if cosine >= threshold and _has_negation(claim.text) == _has_negation(chunk_text):
        return Stance.SUPPORTS
    return Stance.NEUTRAL


def stance_prompt(claim: Claim, chunk_text: str) -> str:
    return (
        f"CLAIM: {claim.text}\n"
        f"EVIDENCE: {chunk_text}\n"
        "Does the evidence support or contradict the claim? "
        "Answer with exactly one word: supports, contradicts, or neutral."
    )


def assess_support(
    claim: Claim,
    evidence: Sequence[EvidenceItem],
    policy: CorrectionPolicy,
    stance_backend: Backend | None,
    index: DocumentIndex,
    label: MisinfoLabel,
) -> SupportAssessment:
    """Partition evidence by stance and count independent authentic domains.

    The independent-domain count runs over contradicting evidence for a
    misinformation claim and over supporting evidence otherwise, keeping only
    items with authenticity >= theta and counting distinct domains.
    """
    supporting: list[EvidenceItem] = []
    contradicting: list[EvidenceItem] = []
    fallback_used = False
    for item in evidence:
        chunk = index.get_chunk(item.chunk_id)
        if chunk is None:
            continue
        stance: Stance | None = None
        if stance_backend is not None:
            try:
                answer = stance_backend.complete(
                    ChatRequest.user(stance_prompt(claim, chunk.text), max_tokens=8)
                ).strip().lower()
                stance = Stance(answer) if answer in [s.value for s in Stance] else None
            except BackendError as exc:
                logger.warning("stance backend failed (%s); using rule fallback", exc)
                stance = None
        if stance is None:
            fallback_used = True
            stance = rule_stance(claim, chunk.text, chunk.embedding, index, policy.stance_agree_threshold)
        if stance is Stance.SUPPORTS:
            supporting.append(item)
        elif stance is Stance.CONTRADICTS:
            contradicting.append(item)
    counted = contradicting if label is not MisinfoLabel.NOT_MISINFORMATION else supporting
    domains = {
        index.docs[item.doc_id].domain
        for item in counted
        if item.authenticity >= policy.theta_min_authenticity
    }
    return SupportAssessment(
        supporting=tuple(supporting),
        contradicting=tuple(contradicting),
        independent_domains=len(domains),
        stance_fallback=fallback_used,
    )


@dataclass
class ExpansionResult:
    evidence: tuple[EvidenceItem, ...]
    assessment: SupportAssessment
    plan: QueryPlan
    external_search_error: str | None = None


def expand_if_insufficient(
    claim: Claim,
    plan: QueryPlan,
    evidence: Sequence[EvidenceItem],
    assessment: SupportAssessment,
    policy: CorrectionPolicy,
    index: DocumentIndex,
    weights: RankingWeights,
    stance_backend: Backend | None,
    external_client: ExternalSearchClient | None = None,
    now: datetime | None = None,
) -> ExpansionResult:
    """Deepen retrieval while independent domains fall short of the minimum.

    Depth doubles (capped at k_max) per iteration; if the corpus still cannot
    supply enough independent domains and external search is enabled, the
    client is queried once and its documents indexed before a final pass.
    """
    current_evidence = tuple(evidence)
    current = assessment
    current_plan = plan
    expanded = False
    external_error: str | None = None

    def reassess(new_plan: QueryPlan) -> tuple[tuple[EvidenceItem, ...], SupportAssessment]:
        candidates = retrieve(new_plan, weights, index)
        items = tuple(rerank(claim, candidates, weights, index, new_plan, now=now))
        return items, assess_support(claim, items, policy, stance_backend, index, new_plan.label)

    while current.independent_domains < policy.n_min_independent and current_plan.k < policy.k_max:
        expanded = True
        current_plan = current_plan.with_k(min(current_plan.k * policy.k_expand_factor, policy.k_max))
        current_evidence, current = reassess(current_plan)

    if (
        current.independent_domains < policy.n_min_independent
        and policy.external_search_enabled
        and external_client is not None
    ):
        expanded = True
        try:
            found = external_client.search(list(current_plan.claim_terms), max_results=current_plan.k)
            for doc in found:
                try:
                    index.add(doc)
                except DuplicateDocumentError:
                    continue
        except Exception as exc:  # external transport is best-effort
            external_error = str(exc)
            logger.warning("external search failed: %s", exc)
        current_evidence, current = reassess(current_plan)

    final = SupportAssessment(
        supporting=current.supporting,
        contradicting=current.contradicting,
        independent_domains=current.independent_domains,
        expanded=expanded,
        stance_fallback=current.stance_fallback,
    )
    return ExpansionResult(
        evidence=current_evidence,
        assessment=final,
        plan=current_plan,
        external_search_error=external_error,
    )


NO_CORRECTION_MARKER = "No correction needed"


def correction_prompt(claim: Claim, label: MisinfoLabel, snippets: Sequence[str]) -> str:
    lines = [
        f"The following claim was classified as {label.value}:",
        f"CLAIM: {claim.text}",
        "Contradicting evidence:",
    ]
    lines.extend(f"- {snippet}" for snippet in snippets)
    lines.append("Write a concise, accurate correction of the claim.")
    return "\n".join(lines)


def _citations_from(
    items: Sequence[EvidenceItem], index: DocumentIndex, limit: int
) -> tuple[Citation, ...]:
    best_per_doc: dict[str, EvidenceItem] = {}
    for item in items:
        kept = best_per_doc.get(item.doc_id)
        if kept is None or item.authenticity > kept.authenticity:
            best_per_doc[item.doc_id] = item
    ordered = sorted(best_per_doc.values(), key=lambda it: (-it.authenticity, it.doc_id))
    citations = []
    for item in ordered[:limit]:
        doc = index.docs[item.doc_id]
        citations.append(
            Citation(
                doc_id=doc.id,
                url=doc.url,
                domain=doc.domain,
                authenticity=item.authenticity,
                published_at=doc.published_at,
            )
        )
    return tuple(citations)


@dataclass(frozen=True)
class CorrectionOutcome:
    correction: Correction
    generator_fallback: bool
    assessment: SupportAssessment


def generate_correction(
    claim: Claim,
    label: MisinfoLabel,
    assessment: SupportAssessment,
    backend: Backend | None,
    instructions: UserInstructions,
    classifier_confidence: float,
    policy: CorrectionPolicy,
    index: DocumentIndex,
    lineage: LineageGraph,
) -> CorrectionOutcome:
    """Build the Correction: backend text plus authenticity-ordered citations.

    confidence = min(1, independent_domains / n_min_independent) * classifier
    confidence. A backend failure degrades to a deterministic template, never
    an abort.
    """
    citation_limit = max(instructions.min_independent_sources, 3)
    generator_fallback = False
    if label is MisinfoLabel.NOT_MISINFORMATION:
        statement = f"{NO_CORRECTION_MARKER}: {claim.text}"
        citations = _citations_from(assessment.supporting, index, citation_limit)
    else:
        citations = _citations_from(assessment.contradicting, index, citation_limit)
        snippets = []
        for item in assessment.contradicting[:3]:
            chunk = index.get_chunk(item.chunk_id)
            if chunk is not None:
                snippets.append(chunk.text)
        statement = ""
        if backend is not None:
            try:
                statement = backend.complete(
                    ChatRequest.user(correction_prompt(claim, label, snippets), max_tokens=512)
                ).strip()
            except BackendError as exc:
                logger.warning("correction backend failed (%s); using template", exc)
        if not statement:
            generator_fallback = True
            sources = ", ".join(c.domain for c in citations) or "none"
            statement = (
                f"Claim contradicted by {len(citations)} sources: {sources}. "
                f"The claim as stated is classified as {label.value} and is not supported "
                "by the indexed evidence."
            )
    confidence = min(1.0, assessment.independent_domains / policy.n_min_independent)
    confidence *= max(0.0, min(1.0, classifier_confidence))
    correction = Correction(
        claim_id=claim.id,
        label=label,
        corrected_statement=statement,
        citations=citations,
        confidence=confidence,
        lineage=lineage,
    )
    return CorrectionOutcome(
        correction=correction, generator_fallback=generator_fallback, assessment=assessment
    )


class CorrectorAgent:
    def __init__(
        self,
        index: DocumentIndex,
        policy: CorrectionPolicy,
        weights: RankingWeights,
        backend: Backend | None = None,
        stance_backend: Backend | None = None,
        external_client: ExternalSearchClient | None = None,
    ) -> None:
        self.index = index
        self.policy = policy
        self.weights = weights
        self.backend = backend
        self.stance_backend = stance_backend
        self.external_client = external_client

    def correct(
        self,
        claim: Claim,
        label: MisinfoLabel,
        plan: QueryPlan,
        evidence: Sequence[EvidenceItem],
        lineage: LineageGraph,
        classifier_confidence: float,
        now: datetime | None = None,
    ) -> CorrectionOutcome:
        assessment = assess_support(claim, evidence, self.policy, self.stance_backend, self.index, label)
        expansion = expand_if_insufficient(
            claim,
            plan,
            evidence,
            assessment,
            self.policy,
            self.index,
            self.weights,
            self.stance_backend,
            self.external_client,
            now=now,
        )
        return generate_correction(
            claim,
            label,
            expansion.assessment,
            self.backend,
            claim.effective_instructions(),
            classifier_confidence,
            self.policy,
            self.index,
            lineage,
        )

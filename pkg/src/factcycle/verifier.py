"""Verification agent: the final checklist, report rendering, and the
per-domain credibility ledger.

The first four checks (citations_exist, reliability_threshold,
label_alignment, format_spec) are mandatory; logical_consistency and tone are
advisory. Any mandatory failure rejects the correction, advisory failures
route it to human review, and ledger updates happen only on a definite
verdict.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

from .backends import Backend, BackendError, ChatRequest
from .classifier import ClassificationResult
from .domain import (
    CheckName,
    CheckResult,
    Claim,
    Correction,
    EvidenceItem,
    MisinfoLabel,
    ReportFormat,
    Tone,
    UserInstructions,
    Verdict,
    VerificationReport,
    make_check,
    parse_timestamp,
    render_timestamp,
    utc_now,
)
from .indexer import DocumentIndex

REPORT_SECTION_HEADERS = (
    "## Claim",
    "## Classification",
    "## Correction",
    "## Evidence",
    "## Lineage",
    "## Checks",
)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_final_text(
    claim: Claim,
    correction: Correction,
    confidence: float,
    instructions: UserInstructions,
    checks: Sequence[CheckResult] = (),
) -> str:
    """Render the user-facing text in the requested format.

    The grammar is fixed per format: report emits the six section headers in
    order, bullet emits only "- " lines, prose emits a paragraph followed by a
    "Sources:" list. Check outcomes are included when available; the grammar
    does not depend on them.
    """
    fmt = instructions.format
    citations = correction.citations
    check_lines = [
        f"{c.name.value}: {'passed' if c.passed else 'failed'}" for c in checks
    ] or ["pending"]
    if fmt is ReportFormat.BULLET:
        lines = [
            f"- Claim: {claim.text}",
            f"- Label: {correction.label.value} (confidence {confidence:.3f})",
            f"- Correction: {correction.corrected_statement}",
        ]
        lines.extend(
            f"- Source: {c.url} (authenticity {c.authenticity:.3f})" for c in citations
        )
        if correction.lineage.nodes:
            lines.append(f"- Origin: {correction.lineage.origin_id}")
        lines.extend(f"- Check {line}" for line in check_lines)
        return "\n".join(lines)
    if fmt is ReportFormat.REPORT:
        evidence_lines = [
            f"- {c.domain} ({c.url}), authenticity {c.authenticity:.3f}, published {render_timestamp(c.published_at)}"
            for c in citations
        ] or ["- none"]
        lineage = correction.lineage
        lineage_lines = (
            [
                f"- origin: {lineage.origin_id}",
                f"- documents: {len(lineage.nodes)}",
                f"- links: {len(lineage.edges)}",
            ]
            if lineage.nodes
            else ["- no lineage recovered"]
        )
        sections = [
            ("## Claim", [claim.text]),
            ("## Classification", [f"{correction.label.value} (confidence {confidence:.3f})"]),
            ("## Correction", [correction.corrected_statement]),
            ("## Evidence", evidence_lines),
            ("## Lineage", lineage_lines),
            ("## Checks", [f"- {line}" for line in check_lines]),
        ]
        parts = []
        for header, body in sections:
            parts.append(header)
            parts.extend(body)
        return "\n".join(parts)
    # prose
    source_lines = [f"{c.url} (authenticity {c.authenticity:.3f})" for c in citations]
    paragraph = correction.corrected_statement
    return paragraph + "\n\nSources:\n" + ("\n".join(source_lines) if source_lines else "none")


def matches_format(text: str, fmt: ReportFormat) -> bool:
    if fmt is ReportFormat.BULLET:
        return all(line.startswith("- ") for line in text.splitlines() if line.strip())
    if fmt is ReportFormat.REPORT:
        position = -1
        for header in REPORT_SECTION_HEADERS:
            found = text.find(header)
            if found == -1 or found < position:
                return False
            position = found
        return True
    return "Sources:" in text.splitlines()


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def _yes_no(backend: Backend, prompt: str) -> bool | None:
    """Ask a yes/no question; None when the backend fails or answers junk."""
    try:
        answer = backend.complete(ChatRequest.user(prompt, max_tokens=4)).strip().lower()
    except BackendError:
        return None
    if answer.startswith("yes"):
        return True
    if answer.startswith("no"):
        return False
    return None


def run_checks(
    correction: Correction,
    evidence: Sequence[EvidenceItem],
    claim: Claim,
    classifier_label: MisinfoLabel,
    confidence: float,
    index: DocumentIndex,
    backend: Backend | None = None,
) -> list[CheckResult]:
    """Run the validation checklist; failures are values, never errors."""
    instructions = claim.effective_instructions()
    checks: list[CheckResult] = []

    missing = [c.doc_id for c in correction.citations if index.get_doc(c.doc_id) is None]
    checks.append(
        make_check(
            CheckName.CITATIONS_EXIST,
            not missing,
            "all citations resolvable" if not missing else f"unresolvable: {missing}",
        )
    )

    weak = [c.doc_id for c in correction.citations if c.authenticity < instructions.min_authenticity]
    checks.append(
        make_check(
            CheckName.RELIABILITY_THRESHOLD,
            not weak,
            f"threshold {instructions.min_authenticity}"
            + ("" if not weak else f"; below: {weak}"),
        )
    )

    aligned = correction.label is classifier_label
    checks.append(
        make_check(
            CheckName.LABEL_ALIGNMENT,
            aligned,
            f"correction label {correction.label.value} vs classifier {classifier_label.value}",
        )
    )

    provisional = render_final_text(claim, correction, confidence, instructions)
    format_ok = matches_format(provisional, instructions.format)
    checks.append(
        make_check(CheckName.FORMAT_SPEC, format_ok, f"format {instructions.format.value}")
    )

    consistency: bool | None = None
    if backend is not None:
        snippets = []
        for citation in correction.citations[:3]:
            doc = index.get_doc(citation.doc_id)
            if doc is not None:
                snippets.append(doc.body[:400])
        prompt = (
            "CORRECTION: "
            + correction.corrected_statement
            + "\nCITED SNIPPETS:\n"
            + "\n".join(f"- {s}" for s in snippets)
            + "\nDoes the correction contradict any cited snippet? Answer yes or no."
        )
        consistency = _yes_no(backend, prompt)
    if consistency is None:
        checks.append(
            make_check(CheckName.LOGICAL_CONSISTENCY, True, "rule fallback: pass")
        )
    else:
        checks.append(
            make_check(
                CheckName.LOGICAL_CONSISTENCY,
                not consistency,
                "backend found contradiction" if consistency else "backend found no contradiction",
            )
        )

    if instructions.tone is Tone.NEUTRAL:
        checks.append(make_check(CheckName.TONE, True, "neutral tone; not checked"))
    else:
        verdict: bool | None = None
        if backend is not None:
            prompt = (
                f"TEXT: {correction.corrected_statement}\n"
                f"Does this text read as {instructions.tone.value}? Answer yes or no."
            )
            verdict = _yes_no(backend, prompt)
        passed = True if verdict is None else verdict
        checks.append(
            make_check(
                CheckName.TONE,
                passed,
                "rule fallback: pass" if verdict is None else f"backend: {'yes' if verdict else 'no'}",
            )
        )
    return checks


def decide_verdict(checks: Sequence[CheckResult]) -> Verdict:
    """Rejected on any mandatory failure, needs_review on advisory-only
    failures, verified otherwise."""
    if any(not c.passed for c in checks if c.mandatory):
        return Verdict.REJECTED
    if any(not c.passed for c in checks):
        return Verdict.NEEDS_REVIEW
    return Verdict.VERIFIED


def finalize(
    correction: Correction,
    checks: Sequence[CheckResult],
    claim: Claim,
    confidence: float,
) -> VerificationReport:
    instructions = claim.effective_instructions()
    final_text = render_final_text(claim, correction, confidence, instructions, checks)
    return VerificationReport(
        claim_id=correction.claim_id,
        checks=tuple(checks),
        verdict=decide_verdict(checks),
        final_text=final_text,
    )


# ---------------------------------------------------------------------------
# Credibility ledger
# ---------------------------------------------------------------------------

@dataclass
class LedgerEntry:
    score: float = 0.5
    n_updates: int = 0
    updated_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "n_updates": self.n_updates,
            "updated_at": None if self.updated_at is None else render_timestamp(self.updated_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> LedgerEntry:
        updated = data.get("updated_at")
        return cls(
            score=float(data["score"]),
            n_updates=int(data["n_updates"]),
            updated_at=None if updated is None else parse_timestamp(updated),
        )


class CredibilityLedger:
    """EMA over verification outcomes per cited domain.

    score' = lambda*outcome + (1-lambda)*score; new domains start at 0.5.
    Updates are serialized; needs_review outcomes never reach this object.
    """

    def __init__(self, ema_lambda: float = 0.1) -> None:
        if not 0.0 < ema_lambda < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        self.ema_lambda = ema_lambda
        self.entries: dict[str, LedgerEntry] = {}
        self._lock = threading.Lock()

    def get(self, domain: str) -> LedgerEntry | None:
        return self.entries.get(domain)

    def update(self, domains: Sequence[str], outcome: float, now: datetime | None = None) -> None:
        if outcome not in (0.0, 1.0):
            raise ValueError("outcome must be 1.0 (verified) or 0.0 (rejected)")
        stamp = now or utc_now()
        with self._lock:
            for domain in domains:
                entry = self.entries.setdefault(domain, LedgerEntry())
                entry.score = self.ema_lambda * outcome + (1.0 - self.ema_lambda) * entry.score
                entry.n_updates += 1
                entry.updated_at = stamp

    def save(self, path: str | Path) -> None:
        payload = {dom: entry.to_dict() for dom, entry in sorted(self.entries.items())}
        Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, ema_lambda: float = 0.1) -> CredibilityLedger:
        ledger = cls(ema_lambda)
        target = Path(path)
        if target.exists():
            data = json.loads(target.read_text(encoding="utf-8"))
            ledger.entries = {dom: LedgerEntry.from_dict(entry) for dom, entry in data.items()}
        return ledger


def update_ledger(ledger: CredibilityLedger, domains: Sequence[str], verdict: Verdict,
                  now: datetime | None = None) -> CredibilityLedger:
    """Apply a verdict to the cited domains; needs_review leaves it unchanged."""
    if verdict is Verdict.VERIFIED:
        ledger.update(domains, 1.0, now=now)
    elif verdict is Verdict.REJECTED:
        ledger.update(domains, 0.0, now=now)
    return ledger


class VerifierAgent:
    def __init__(
        self,
        index: DocumentIndex,
        ledger: CredibilityLedger,
        backend: Backend | None = None,
    ) -> None:
        self.index = index
        self.ledger = ledger
        self.backend = backend

    def verify(
        self,
        claim: Claim,
        correction: Correction,
        evidence: Sequence[EvidenceItem],
        classification: ClassificationResult,
        now: datetime | None = None,
    ) -> VerificationReport:
        checks = run_checks(
            correction,
            evidence,
            claim,
            classification.label,
            classification.confidence,
            self.index,
            self.backend,
        )
        report = finalize(correction, checks, claim, classification.confidence)
        domains = sorted({c.domain for c in correction.citations})
        update_ledger(self.ledger, domains, report.verdict, now=now)
        return report

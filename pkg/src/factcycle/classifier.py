"""Classifier agent: taxonomy scoring via an ensemble of voters.

Voters are LLM backends (answers parsed into smoothed one-hot distributions)
plus a deterministic keyword-rule classifier. The final label is the majority
of per-voter argmax labels, with ties broken by summed distribution mass over
the tied labels and then taxonomy declaration order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backends import Backend, BackendError, ChatRequest
from .domain import (
    Claim,
    DomainError,
    LabelDistribution,
    MISINFO_LABELS,
    MisinfoLabel,
    UnknownLabelError,
    mean_distribution,
    parse_label,
    taxonomy_index,
)

RULE_VOTER_NAME = "rule"
SMOOTHED_PEAK = 0.9


class AllVotersFailedError(DomainError):
    """Every enabled voter errored; no classification is possible."""


Lexicons = dict[MisinfoLabel, tuple[str, ...]]


def load_lexicons(path: str | Path) -> Lexicons:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    lexicons: Lexicons = {}
    for name, keywords in raw.items():
        lexicons[parse_label(name)] = tuple(kw.lower() for kw in keywords)
    missing = [lab.value for lab in MISINFO_LABELS if lab not in lexicons]
    if missing:
        raise ValueError(f"lexicon file missing labels: {missing}")
    return lexicons


def _keyword_hits(text: str, keyword: str) -> int:
    pattern = r"\b" + re.escape(keyword) + r"\b"
    return len(re.findall(pattern, text))


def rule_classify(claim: Claim, lexicons: Lexicons) -> LabelDistribution:
    """Keyword-hit distribution over the 7 misinformation labels.

    Zero hits puts all mass on not_misinformation; otherwise each label gets
    hits/total and not_misinformation gets 0.
    """
    text = claim.text.lower()
    hits: dict[MisinfoLabel, int] = {}
    for label in MISINFO_LABELS:
        hits[label] = sum(_keyword_hits(text, kw) for kw in lexicons.get(label, ()))
    total = sum(hits.values())
    if total == 0:
        return LabelDistribution.point_mass(MisinfoLabel.NOT_MISINFORMATION)
    scores = {label: count / total for label, count in hits.items()}
    scores[MisinfoLabel.NOT_MISINFORMATION] = 0.0
    return LabelDistribution.from_mapping(scores)


def render_prompt(template: str, claim: Claim) -> str:
    return template.replace("{claim}", claim.text)


def llm_classify(
    claim: Claim, backend: Backend, template: str
) -> tuple[LabelDistribution, bool]:
    """Ask a backend for one taxonomy name; returns (distribution, parse_failed).

    The answer becomes a smoothed one-hot (0.9 on the parsed label); an
    unparsable answer maps to not_misinformation with the failure flagged.
    Backend errors propagate.
    """
    prompt = render_prompt(template, claim)
    answer = backend.complete(ChatRequest.user(prompt, max_tokens=16))
    try:
        label = parse_label(answer)
    except UnknownLabelError:
        return LabelDistribution.smoothed_one_hot(MisinfoLabel.NOT_MISINFORMATION, SMOOTHED_PEAK), True
    return LabelDistribution.smoothed_one_hot(label, SMOOTHED_PEAK), False


@dataclass(frozen=True)
class VoterOutput:
    voter_name: str
    label: MisinfoLabel
    distribution: LabelDistribution
    parse_failed: bool = False

    def to_dict(self) -> dict:
        return {
            "voter_name": self.voter_name,
            "label": self.label.value,
            "distribution": self.distribution.to_dict(),
            "parse_failed": self.parse_failed,
        }


@dataclass(frozen=True)
class ClassificationResult:
    label: MisinfoLabel
    distribution: LabelDistribution
    confidence: float
    voter_outputs: tuple[VoterOutput, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "distribution": self.distribution.to_dict(),
            "confidence": self.confidence,
            "voter_outputs": [v.to_dict() for v in self.voter_outputs],
        }


def majority_label(votes: Sequence[VoterOutput]) -> MisinfoLabel:
    """Majority of argmax labels; ties by summed mass, then taxonomy order."""
    counts: dict[MisinfoLabel, int] = {}
    for vote in votes:
        counts[vote.label] = counts.get(vote.label, 0) + 1
    top = max(counts.values())
    tied = [label for label, count in counts.items() if count == top]
    if len(tied) > 1:
        mass = {
            label: sum(vote.distribution[label] for vote in votes) for label in tied
        }
        best = max(mass.values())
        tied = [label for label in tied if abs(mass[label] - best) <= 1e-12]
    return min(tied, key=taxonomy_index)


def fuse_votes(votes: Sequence[VoterOutput]) -> ClassificationResult:
    label = majority_label(votes)
    distribution = mean_distribution(v.distribution for v in votes)
    return ClassificationResult(
        label=label,
        distribution=distribution,
        confidence=distribution[label],
        voter_outputs=tuple(votes),
    )


def classify(
    claim: Claim,
    backends: Sequence[tuple[str, Backend]],
    template: str,
    lexicons: Lexicons | None,
    use_rule_backend: bool = True,
) -> ClassificationResult:
    """Run every voter, then fuse. Failed backends are skipped; if every voter
    fails (or none is enabled) an AllVotersFailedError is raised."""
    votes: list[VoterOutput] = []
    errors: list[str] = []
    for name, backend in backends:
        try:
            distribution, parse_failed = llm_classify(claim, backend, template)
        except BackendError as exc:
            errors.append(f"{name}: {exc}")
            continue
        votes.append(
            VoterOutput(
                voter_name=name,
                label=distribution.argmax(),
                distribution=distribution,
                parse_failed=parse_failed,
            )
        )
    if use_rule_backend:
        if lexicons is None:
            raise ValueError("rule backend enabled but no lexicons loaded")
        distribution = rule_classify(claim, lexicons)
        votes.append(
            VoterOutput(
                voter_name=RULE_VOTER_NAME,
                label=distribution.argmax(),
                distribution=distribution,
            )
        )
    if not votes:
        detail = "; ".join(errors) if errors else "no voters enabled"
        raise AllVotersFailedError(f"classification impossible: {detail}")
    return fuse_votes(votes)


class ClassifierAgent:
    """Config-wired frontend over :func:`classify`.

    A zero-voter configuration is accepted here and surfaces as an
    AllVotersFailedError at classification time so the orchestrator can report
    it as a stage failure.
    """

    def __init__(
        self,
        backends: Sequence[tuple[str, Backend]],
        template: str,
        lexicons: Lexicons | None,
        use_rule_backend: bool = True,
    ) -> None:
        self.backends = list(backends)
        self.template = template
        self.lexicons = lexicons
        self.use_rule_backend = use_rule_backend

    def classify(self, claim: Claim) -> ClassificationResult:
        return classify(claim, self.backends, self.template, self.lexicons, self.use_rule_backend)

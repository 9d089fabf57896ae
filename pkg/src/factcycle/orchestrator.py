"""Central coordinator: configuration, the audit chain, and the pipeline.

One master service runs classify -> extract -> correct -> verify per claim.
Every inter-stage handoff is wrapped in an AgentMessage and appended to the
claim's hash-linked audit chain before the next stage starts, so a partial
trail survives any stage failure.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

from .backends import Backend, BackendProtocolError, BackendTimeoutError, build_backend
from .classifier import ClassificationResult, ClassifierAgent, load_lexicons
from .corrector import (
    CorrectionOutcome,
    CorrectionPolicy,
    CorrectorAgent,
    ExternalSearchClient,
)
from .domain import (
    AgentMessage,
    AuditRecord,
    Claim,
    Correction,
    Document,
    DomainError,
    Stage,
    Verdict,
    VerificationReport,
    ZERO_HASH,
    canonical_bytes,
    canonical_json,
    sha256_hex,
    utc_now,
    validate_document,
)
from .extractor import EvidenceBundle, ExtractorAgent, RankingWeights
from .indexer import ChunkingPolicy, DocumentIndex, load_reputation_table
from .verifier import CredibilityLedger, VerifierAgent

logger = logging.getLogger(__name__)


class ConfigError(DomainError):
    pass


class StageTimeoutError(DomainError):
    def __init__(self, stage: str, timeout_ms: int) -> None:
        super().__init__(f"stage {stage} exceeded {timeout_ms} ms")
        self.stage = stage


class StageFailureError(DomainError):
    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# Audit chain
# ---------------------------------------------------------------------------

def chain_hash(prev_hash: str, payload_hash: str, seq: int) -> str:
    """Link hash: SHA-256 over prev_hash bytes || payload_hash bytes || seq
    as an 8-byte big-endian integer."""
    data = bytes.fromhex(prev_hash) + bytes.fromhex(payload_hash) + seq.to_bytes(8, "big")
    return sha256_hex(data)


def append_audit(records: list[AuditRecord], message: AgentMessage) -> AuditRecord:
    """Append one message; record 0 links from the all-zero hash."""
    seq = len(records)
    if seq == 0:
        prev = ZERO_HASH
    else:
        last = records[-1]
        prev = chain_hash(last.prev_hash, last.payload_hash, last.seq)
    record = AuditRecord(
        seq=seq,
        prev_hash=prev,
        payload_hash=sha256_hex(canonical_bytes(message)),
        message=message,
    )
    records.append(record)
    return record


@dataclass(frozen=True)
class AuditVerification:
    valid: bool
    first_bad_seq: int | None = None


def verify_audit_chain(records: Sequence[AuditRecord]) -> AuditVerification:
    """Recompute every link; reports the lowest mismatching seq."""
    expected_prev = ZERO_HASH
    for position, record in enumerate(records):
        if (
            record.seq != position
            or record.prev_hash != expected_prev
            or record.payload_hash != sha256_hex(canonical_bytes(record.message))
        ):
            return AuditVerification(valid=False, first_bad_seq=position)
        expected_prev = chain_hash(record.prev_hash, record.payload_hash, record.seq)
    return AuditVerification(valid=True)


class AuditStore:
    """Per-claim hash chains plus a global sequence over all records."""

    def __init__(self, state_dir: Path | None = None) -> None:
        self._chains: dict[str, list[AuditRecord]] = {}
        self._ranges: dict[str, tuple[int, int]] = {}
        self._global_seq = 0
        self._lock = threading.Lock()
        self.state_dir = state_dir

    def append(self, claim_id: str, message: AgentMessage) -> AuditRecord:
        with self._lock:
            chain = self._chains.setdefault(claim_id, [])
            record = append_audit(chain, message)
            low, _ = self._ranges.get(claim_id, (self._global_seq, self._global_seq))
            self._ranges[claim_id] = (low, self._global_seq)
            self._global_seq += 1
            return record

    def records(self, claim_id: str) -> list[AuditRecord]:
        with self._lock:
            return list(self._chains.get(claim_id, []))

    def seq_range(self, claim_id: str) -> tuple[int, int] | None:
        return self._ranges.get(claim_id)

    def persist(self, claim_id: str) -> Path | None:
        if self.state_dir is None:
            return None
        audit_dir = self.state_dir / "audit"
        audit_dir.mkdir(parents=True, exist_ok=True)
        target = audit_dir / f"{claim_id}.json"
        payload = [record.to_dict() for record in self.records(claim_id)]
        target.write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
        return target

    def load(self, claim_id: str) -> list[AuditRecord]:
        in_memory = self.records(claim_id)
        if in_memory:
            return in_memory
        if self.state_dir is not None:
            target = self.state_dir / "audit" / f"{claim_id}.json"
            if target.exists():
                data = json.loads(target.read_text(encoding="utf-8"))
                return [AuditRecord.from_dict(entry) for entry in data]
        return []


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _check_keys(data: dict[str, Any], allowed: set[str], context: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")


def packaged_data(name: str) -> Path:
    return Path(str(resources.files("factcycle").joinpath("data", name)))


@dataclass
class IndexSettings:
    dim: int = 256
    k1: float = 1.2
    b: float = 0.75
    policy: ChunkingPolicy = field(default_factory=ChunkingPolicy)
    path: str = "factcycle_state/index"
    reputation_table: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IndexSettings:
        _check_keys(data, {"dim", "k1", "b", "policy", "path", "reputation_table"}, "index")
        kwargs = dict(data)
        if "policy" in kwargs:
            kwargs["policy"] = ChunkingPolicy.from_dict(kwargs["policy"])
        return cls(**kwargs)


@dataclass
class ClassifierSettings:
    backends: list[str] = field(default_factory=list)
    use_rule_backend: bool = True
    prompt_template_id: str = "classify_v1"
    lexicon_file: str | None = None
    template_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ClassifierSettings:
        _check_keys(
            data,
            {"backends", "use_rule_backend", "prompt_template_id", "lexicon_file", "template_dir"},
            "classifier",
        )
        return cls(**data)


@dataclass
class ExtractorSettings:
    weights: RankingWeights = field(default_factory=RankingWeights)
    k: int = 20

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExtractorSettings:
        _check_keys(data, {"weights", "k"}, "extractor")
        kwargs = dict(data)
        if "weights" in kwargs:
            _check_keys(
                kwargs["weights"], {"alpha", "beta", "gamma", "rrf_k", "tau_lineage"}, "extractor.weights"
            )
            kwargs["weights"] = RankingWeights(**kwargs["weights"])
        return cls(**kwargs)


@dataclass
class CorrectorSettings:
    policy: CorrectionPolicy = field(default_factory=CorrectionPolicy)
    backend: str | None = None
    stance_backend: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CorrectorSettings:
        _check_keys(data, {"policy", "backend", "stance_backend"}, "corrector")
        kwargs = dict(data)
        if "policy" in kwargs:
            _check_keys(
                kwargs["policy"],
                {
                    "theta_min_authenticity",
                    "n_min_independent",
                    "k_expand_factor",
                    "k_max",
                    "external_search_enabled",
                    "stance_agree_threshold",
                },
                "corrector.policy",
            )
            kwargs["policy"] = CorrectionPolicy(**kwargs["policy"])
        return cls(**kwargs)


@dataclass
class VerifierSettings:
    backend: str | None = None
    ledger_file: str | None = None
    ema_lambda: float = 0.1
    feedback_to_authenticity: bool = False

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> VerifierSettings:
        _check_keys(
            data, {"backend", "ledger_file", "ema_lambda", "feedback_to_authenticity"}, "verifier"
        )
        return cls(**data)


@dataclass
class RetrySettings:
    max_attempts: int = 2
    backoff_ms: int = 500

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RetrySettings:
        _check_keys(data, {"max_attempts", "backoff_ms"}, "pipeline.retry")
        settings = cls(**data)
        if settings.max_attempts < 1:
            raise ConfigError("retry.max_attempts must be >= 1")
        return settings


@dataclass
class PipelineSettings:
    stage_timeout_ms: int | dict[str, int] = 30_000
    max_concurrent_claims: int = 8
    retry: RetrySettings = field(default_factory=RetrySettings)
    deterministic_clock: bool = False

    def timeout_for(self, stage: str) -> int:
        if isinstance(self.stage_timeout_ms, dict):
            return int(self.stage_timeout_ms.get(stage, 30_000))
        return int(self.stage_timeout_ms)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PipelineSettings:
        _check_keys(
            data,
            {"stage_timeout_ms", "max_concurrent_claims", "retry", "deterministic_clock"},
            "pipeline",
        )
        kwargs = dict(data)
        if "retry" in kwargs:
            kwargs["retry"] = RetrySettings.from_dict(kwargs["retry"])
        settings = cls(**kwargs)
        timeouts = settings.stage_timeout_ms
        values = timeouts.values() if isinstance(timeouts, dict) else [timeouts]
        if any(v <= 0 for v in values):
            raise ConfigError("stage timeouts must be positive")
        return settings


@dataclass
class ServerSettings:
    host: str = "127.0.0.1"
    port: int = 8080
    state_dir: str = "factcycle_state"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ServerSettings:
        _check_keys(data, {"host", "port", "state_dir"}, "server")
        return cls(**data)


_TOP_LEVEL_KEYS = {
    "index",
    "classifier",
    "extractor",
    "corrector",
    "verifier",
    "pipeline",
    "backends",
    "server",
}

_BACKEND_KEYS = {
    "kind",
    "endpoint",
    "model_id",
    "timeout_ms",
    "script_file",
    "default_response",
    "delay_ms",
    "response_path",
    "max_in_flight",
}


@dataclass
class AppConfig:
    index: IndexSettings = field(default_factory=IndexSettings)
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    extractor: ExtractorSettings = field(default_factory=ExtractorSettings)
    corrector: CorrectorSettings = field(default_factory=CorrectorSettings)
    verifier: VerifierSettings = field(default_factory=VerifierSettings)
    pipeline: PipelineSettings = field(default_factory=PipelineSettings)
    backends: dict[str, dict[str, Any]] = field(default_factory=dict)
    server: ServerSettings = field(default_factory=ServerSettings)
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> AppConfig:
        _check_keys(data, _TOP_LEVEL_KEYS, "top-level config")
        backends = data.get("backends", {})
        for name, entry in backends.items():
            _check_keys(entry, _BACKEND_KEYS, f"backends.{name}")
        return cls(
            index=IndexSettings.from_dict(data.get("index", {})),
            classifier=ClassifierSettings.from_dict(data.get("classifier", {})),
            extractor=ExtractorSettings.from_dict(data.get("extractor", {})),
            corrector=CorrectorSettings.from_dict(data.get("corrector", {})),
            verifier=VerifierSettings.from_dict(data.get("verifier", {})),
            pipeline=PipelineSettings.from_dict(data.get("pipeline", {})),
            backends={name: dict(entry) for name, entry in backends.items()},
            server=ServerSettings.from_dict(data.get("server", {})),
            base_dir=base_dir or Path.cwd(),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> AppConfig:
        target = Path(path)
        try:
            data = json.loads(target.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {target} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, base_dir=target.resolve().parent)

    def resolve(self, path_value: str) -> Path:
        p = Path(path_value)
        return p if p.is_absolute() else self.base_dir / p


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

class RunStatus(str, Enum):
    QUEUED = "queued"
    CLASSIFYING = "classifying"
    EXTRACTING = "extracting"
    CORRECTING = "correcting"
    VERIFYING = "verifying"
    DONE = "done"
    FAILED = "failed"


@dataclass
class ClaimRun:
    claim: Claim
    status: RunStatus = RunStatus.QUEUED
    result: VerificationReport | None = None
    classification: ClassificationResult | None = None
    correction: Correction | None = None
    audit_seq_range: tuple[int, int] | None = None
    error: str | None = None
    latency_ms: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim": self.claim.to_dict(),
            "status": self.status.value,
            "result": None if self.result is None else self.result.to_dict(),
            "audit_seq_range": list(self.audit_seq_range) if self.audit_seq_range else None,
            "error": self.error,
            "latency_ms": self.latency_ms,
        }


class LogicalClock:
    """Deterministic clock: received_at plus one millisecond per tick."""

    def __init__(self, base: datetime) -> None:
        self.base = base
        self.ticks = 0

    def now(self) -> datetime:
        self.ticks += 1
        return self.base + timedelta(milliseconds=self.ticks)


def _message_id(correlation_id: str, seq: int, kind: str) -> str:
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"factcycle:{correlation_id}:{seq}:{kind}"))


@dataclass
class IngestReport:
    added: int
    rejected: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"added": self.added, "rejected": self.rejected}


class PipelineService:
    """Wires config into agents and runs the per-claim pipeline."""

    def __init__(
        self,
        config: AppConfig,
        index: DocumentIndex | None = None,
        external_client: ExternalSearchClient | None = None,
    ) -> None:
        self.config = config
        state_dir = config.resolve(config.server.state_dir)
        state_dir.mkdir(parents=True, exist_ok=True)
        self.state_dir = state_dir
        reputation = {}
        if config.index.reputation_table:
            reputation = load_reputation_table(config.resolve(config.index.reputation_table))
        self.index_path = config.resolve(config.index.path)
        if index is not None:
            self.index = index
        elif (self.index_path / "manifest.json").exists():
            self.index = DocumentIndex.load(self.index_path, reputation=reputation)
        else:
            self.index = DocumentIndex(
                dim=config.index.dim,
                k1=config.index.k1,
                b=config.index.b,
                policy=config.index.policy,
                reputation=reputation,
            )
        self.backends: dict[str, Backend] = {}
        for name, entry in config.backends.items():
            spec = dict(entry)
            spec["name"] = name
            self.backends[name] = build_backend(spec, base_dir=config.base_dir)

        lexicon_path = (
            config.resolve(config.classifier.lexicon_file)
            if config.classifier.lexicon_file
            else packaged_data("lexicons.json")
        )
        self.lexicons = load_lexicons(lexicon_path)
        template_name = f"{config.classifier.prompt_template_id}.txt"
        if config.classifier.template_dir:
            template_path = config.resolve(config.classifier.template_dir) / template_name
        else:
            template_path = packaged_data("prompts") / template_name
        self.prompt_template = template_path.read_text(encoding="utf-8")

        self.classifier = ClassifierAgent(
            backends=[(name, self._backend(name)) for name in config.classifier.backends],
            template=self.prompt_template,
            lexicons=self.lexicons,
            use_rule_backend=config.classifier.use_rule_backend,
        )
        self.extractor = ExtractorAgent(self.index, config.extractor.weights, k=config.extractor.k)
        self.corrector = CorrectorAgent(
            self.index,
            config.corrector.policy,
            config.extractor.weights,
            backend=self._optional_backend(config.corrector.backend),
            stance_backend=self._optional_backend(config.corrector.stance_backend),
            external_client=external_client,
        )
        ledger_path = (
            config.resolve(config.verifier.ledger_file)
            if config.verifier.ledger_file
            else state_dir / "ledger.json"
        )
        self.ledger_path = ledger_path
        self.ledger = CredibilityLedger.load(ledger_path, ema_lambda=config.verifier.ema_lambda)
        self.verifier = VerifierAgent(
            self.index, self.ledger, backend=self._optional_backend(config.verifier.backend)
        )
        self.audit = AuditStore(state_dir=state_dir)
        self.runs: dict[str, ClaimRun] = {}
        self._runs_lock = threading.Lock()
        self._executor = ThreadPoolExecutor(
            max_workers=config.pipeline.max_concurrent_claims, thread_name_prefix="claim"
        )
        if config.verifier.feedback_to_authenticity:
            self._apply_ledger_feedback()

    def _backend(self, name: str) -> Backend:
        try:
            return self.backends[name]
        except KeyError:
            raise ConfigError(f"backend {name!r} is not declared in config.backends") from None

    def _optional_backend(self, name: str | None) -> Backend | None:
        return None if name is None else self._backend(name)

    def _apply_ledger_feedback(self) -> None:
        # Opt-in loop: verified/rejected history overrides table reputation.
        for domain, entry in self.ledger.entries.items():
            profile = self.index.profiles.get(domain)
            if profile is not None:
                profile.reputation = entry.score
            else:
                self.index.reputation.setdefault(domain, {})["reputation"] = entry.score

    # -- ingestion ------------------------------------------------------------

    def ingest_jsonl(self, text: str) -> IngestReport:
        added = 0
        rejected: list[dict[str, Any]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = Document.from_dict(json.loads(line))
            except (KeyError, ValueError, TypeError) as exc:
                rejected.append({"line": lineno, "reason": f"parse error: {exc}"})
                continue
            violations = validate_document(doc)
            if violations:
                rejected.append({"line": lineno, "id": doc.id, "reason": "; ".join(violations)})
                continue
            try:
                self.index.add(doc)
            except DomainError as exc:
                rejected.append({"line": lineno, "id": doc.id, "reason": str(exc)})
                continue
            added += 1
        return IngestReport(added=added, rejected=rejected)

    def persist_index(self) -> Path:
        return self.index.persist(self.index_path)

    # -- pipeline -------------------------------------------------------------

    def _run_stage(self, stage: Stage, fn: Callable[[], Any]) -> Any:
        timeout_ms = self.config.pipeline.timeout_for(stage.value)
        retry = self.config.pipeline.retry
        attempt = 0
        while True:
            attempt += 1
            box: dict[str, Any] = {}

            def target() -> None:
                try:
                    box["value"] = fn()
                except BaseException as exc:  # propagated below
                    box["error"] = exc

            worker = threading.Thread(target=target, daemon=True)
            worker.start()
            worker.join(timeout_ms / 1000.0)
            if worker.is_alive():
                raise StageTimeoutError(stage.value, timeout_ms)
            if "error" not in box:
                return box["value"]
            error = box["error"]
            transient = isinstance(error, (BackendTimeoutError, BackendProtocolError))
            if transient and attempt < retry.max_attempts:
                time.sleep(retry.backoff_ms / 1000.0 * attempt)
                continue
            raise StageFailureError(stage.value, error) from error

    def run_pipeline(self, claim: Claim) -> ClaimRun:
        """Execute all stages for one claim, auditing every handoff.

        Returns a ClaimRun; stage errors mark it failed and leave the partial
        audit trail intact.
        """
        run = ClaimRun(claim=claim)
        with self._runs_lock:
            self.runs[claim.id] = run
        clock = (
            LogicalClock(claim.received_at).now
            if self.config.pipeline.deterministic_clock
            else utc_now
        )
        start = time.perf_counter()
        counter = {"n": 0}

        def record(stage: Stage, sender: str, recipient: str, kind: str, payload: bytes) -> None:
            message = AgentMessage(
                message_id=_message_id(claim.id, counter["n"], kind),
                correlation_id=claim.id,
                sender=sender,
                recipient=recipient,
                stage=stage,
                payload_kind=kind,
                payload=payload,
                sent_at=clock(),
            )
            counter["n"] += 1
            self.audit.append(claim.id, message)

        def payload_of(data: Any) -> bytes:
            return canonical_json(data).encode("utf-8")

        try:
            run.status = RunStatus.CLASSIFYING
            record(Stage.CLASSIFY, "orchestrator", "classifier", "claim", canonical_bytes(claim))
            classification: ClassificationResult = self._run_stage(
                Stage.CLASSIFY, lambda: self.classifier.classify(claim)
            )
            run.classification = classification
            record(
                Stage.CLASSIFY,
                "classifier",
                "orchestrator",
                "classification",
                payload_of(classification.to_dict()),
            )

            run.status = RunStatus.EXTRACTING
            record(
                Stage.EXTRACT,
                "orchestrator",
                "extractor",
                "extraction_request",
                payload_of({"claim_id": claim.id, "label": classification.label.value}),
            )
            bundle: EvidenceBundle = self._run_stage(
                Stage.EXTRACT,
                lambda: self.extractor.extract(claim, classification.label, now=claim.received_at),
            )
            record(
                Stage.EXTRACT, "extractor", "orchestrator", "evidence_bundle", payload_of(bundle.to_dict())
            )

            run.status = RunStatus.CORRECTING
            record(
                Stage.CORRECT,
                "orchestrator",
                "corrector",
                "correction_request",
                payload_of(
                    {
                        "claim_id": claim.id,
                        "label": classification.label.value,
                        "evidence_count": len(bundle.evidence),
                    }
                ),
            )
            outcome: CorrectionOutcome = self._run_stage(
                Stage.CORRECT,
                lambda: self.corrector.correct(
                    claim,
                    classification.label,
                    bundle.plan,
                    bundle.evidence,
                    bundle.lineage,
                    classification.confidence,
                    now=claim.received_at,
                ),
            )
            run.correction = outcome.correction
            record(
                Stage.CORRECT,
                "corrector",
                "orchestrator",
                "correction",
                payload_of(
                    {
                        "correction": outcome.correction.to_dict(),
                        "generator_fallback": outcome.generator_fallback,
                        "assessment": outcome.assessment.to_dict(),
                    }
                ),
            )

            run.status = RunStatus.VERIFYING
            record(
                Stage.VERIFY,
                "orchestrator",
                "verifier",
                "verification_request",
                payload_of({"claim_id": claim.id}),
            )
            report: VerificationReport = self._run_stage(
                Stage.VERIFY,
                lambda: self.verifier.verify(
                    claim, outcome.correction, bundle.evidence, classification, now=clock()
                ),
            )
            record(
                Stage.VERIFY,
                "verifier",
                "orchestrator",
                "verification_report",
                canonical_bytes(report),
            )
            record(
                Stage.DONE,
                "orchestrator",
                "orchestrator",
                "claim_done",
                payload_of({"claim_id": claim.id, "verdict": report.verdict.value}),
            )
            run.result = report
            run.status = RunStatus.DONE
            if self.config.verifier.feedback_to_authenticity:
                self._apply_ledger_feedback()
        except DomainError as exc:
            run.status = RunStatus.FAILED
            run.error = str(exc)
            logger.error("claim %s failed: %s", claim.id, exc)
        finally:
            run.latency_ms = (time.perf_counter() - start) * 1000.0
            run.audit_seq_range = self.audit.seq_range(claim.id)
            self.audit.persist(claim.id)
            self.ledger.save(self.ledger_path)
        return run

    def run_claim(self, claim: Claim) -> ClaimRun:
        """Synchronous pipeline execution; raises on stage failure."""
        run = self.run_pipeline(claim)
        if run.status is RunStatus.FAILED:
            raise StageFailureError(run.status.value, RuntimeError(run.error or "unknown"))
        return run

    def submit_claim(self, claim: Claim) -> str:
        with self._runs_lock:
            self.runs[claim.id] = ClaimRun(claim=claim)
        self._executor.submit(self.run_pipeline, claim)
        return claim.id

    def get_run(self, claim_id: str) -> ClaimRun | None:
        with self._runs_lock:
            return self.runs.get(claim_id)

    # -- queries used by API/CLI ----------------------------------------------

    def lineage(self, doc_id: str, tau: float | None = None):
        from .extractor import trace_lineage

        return trace_lineage(
            self.index, doc_id, tau if tau is not None else self.config.extractor.weights.tau_lineage
        )

    def credibility(self, domain: str):
        return self.ledger.get(domain)

    def audit_records(self, claim_id: str) -> list[AuditRecord]:
        return self.audit.load(claim_id)

    def health(self) -> dict[str, Any]:
        backends = {name: backend.health_check() for name, backend in self.backends.items()}
        return {
            "healthy": all(status.healthy for status in backends.values()),
            "index": self.index.stats().to_dict(),
            "backends": {
                name: {"healthy": status.healthy, "latency_ms": status.latency_ms}
                for name, status in backends.items()
            },
        }

    def close(self) -> None:
        self._executor.shutdown(wait=True)

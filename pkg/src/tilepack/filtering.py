"""Corpus filtering: heuristic rules, repetition scoring, quality gating.

Text records run all three stages; multimodal records skip the quality gate
(no reliable scorer exists for them) and rely on repetition detection plus
the heuristic rules. Heavily repetitive records are routed to review rather
than dropped outright.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Protocol

from .errors import ConfigurationError, ScorerUnavailableError, ValidationError
from .rendering import Modality

logger = logging.getLogger(__name__)

RULE_LINE_TOO_LONG = "line_too_long"
RULE_TEXT_TOO_SHORT = "text_too_short"
RULE_ZERO_RUN = "zero_run"
RULE_DUPLICATE_LINES = "duplicate_lines"
RULE_NGRAM_REPEAT = "ngram_repeat"


@dataclass(frozen=True)
class RuleConfig:
    max_line_length: int = 8192
    min_line_length: int = 1
    max_zero_run: int = 256
    max_duplicate_line_fraction: float = 0.5
    ngram_order: int = 8
    # 1.0 disables the n-gram heuristic hit; repetition is normally handled
    # by the scored review route instead of a hard rule.
    max_ngram_repeat_fraction: float = 1.0

    def __post_init__(self) -> None:
        if min(self.max_line_length, self.min_line_length, self.max_zero_run) < 1:
            raise ConfigurationError("length thresholds must be positive")
        if self.ngram_order < 1:
            raise ConfigurationError("ngram_order must be >= 1")
        for frac in (self.max_duplicate_line_fraction, self.max_ngram_repeat_fraction):
            if not (0.0 <= frac <= 1.0):
                raise ConfigurationError(f"fraction threshold out of [0,1]: {frac}")


@dataclass(frozen=True)
class Thresholds:
    quality: float = 7.0
    repetition: float = 3.0


class Decision(str, Enum):
    KEEP = "keep"
    DROP = "drop"
    REVIEW = "review"


@dataclass(frozen=True)
class RuleHit:
    rule: str
    position: int
    detail: str


@dataclass(frozen=True)
class FilterVerdict:
    decision: Decision
    rule_hits: tuple[RuleHit, ...] = ()
    quality_score: float | None = None
    repetition_score: float | None = None


class ScorerClient(Protocol):
    """Quality-scoring client contract: a 0-10 score for a text sample.

    Implementations must clamp returned scores to [0, 10] and raise
    ScorerUnavailableError on failure instead of fabricating a score.
    """

    def score(self, text: str, domain_prompt: str) -> float: ...


@dataclass
class StubScorer:
    """Deterministic scorer for tests: fixed scores by record id or default."""

    default: float = 9.0
    by_text: dict = field(default_factory=dict)

    def score(self, text: str, domain_prompt: str) -> float:
        return max(0.0, min(10.0, float(self.by_text.get(text, self.default))))


@dataclass
class HttpScorer:
    """Remote scorer speaking the wire protocol {text, domain, prompt_id} -> {score}."""

    url: str
    prompt_id: str = "default"
    timeout: float = 10.0
    retries: int = 2

    def score(self, text: str, domain_prompt: str) -> float:
        import requests

        payload = {"text": text, "domain": domain_prompt, "prompt_id": self.prompt_id}
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.url, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                return max(0.0, min(10.0, float(resp.json()["score"])))
            except Exception as exc:  # noqa: BLE001 - retried, then surfaced
                last_exc = exc
        raise ScorerUnavailableError(f"scorer at {self.url} failed: {last_exc}")


def heuristic_scan(text: str, rules: RuleConfig | None = None) -> list[RuleHit]:
    """Evaluate every rule independently and report each trigger with evidence."""
    rules = rules or RuleConfig()
    hits: list[RuleHit] = []

    if len(text.strip()) < rules.min_line_length:
        hits.append(RuleHit(RULE_TEXT_TOO_SHORT, 0, f"{len(text.strip())} chars"))

    offset = 0
    long_line_hit = None
    for line in text.split("\n"):
        if long_line_hit is None and len(line) > rules.max_line_length:
            long_line_hit = RuleHit(RULE_LINE_TOO_LONG, offset, f"{len(line)} chars")
        offset += len(line) + 1
    if long_line_hit:
        hits.append(long_line_hit)

    run_start = run_len = 0
    best_start = best_len = 0
    for pos, ch in enumerate(text):
        if ch == "0":
            if run_len == 0:
                run_start = pos
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0
    if best_len > rules.max_zero_run:
        hits.append(RuleHit(RULE_ZERO_RUN, best_start, f"run of {best_len} zeros"))

    lines = [ln for ln in text.split("\n") if ln.strip()]
    if len(lines) > 1:
        dup = len(lines) - len(set(lines))
        frac = dup / len(lines)
        if frac > rules.max_duplicate_line_fraction:
            hits.append(RuleHit(RULE_DUPLICATE_LINES, 0, f"duplicate fraction {frac:.3f}"))

    frac = _ngram_repeat_fraction(text, rules.ngram_order)
    if frac > rules.max_ngram_repeat_fraction:
        hits.append(RuleHit(RULE_NGRAM_REPEAT, 0, f"repeat fraction {frac:.3f}"))

    return hits


def _ngram_repeat_fraction(text: str, order: int) -> float:
    """Share of word n-gram occurrences that repeat an earlier occurrence."""
    words = text.split()
    total = len(words) - order + 1
    if total <= 0:
        return 0.0
    seen: set[tuple[str, ...]] = set()
    repeats = 0
    for i in range(total):
        gram = tuple(words[i : i + order])
        if gram in seen:
            repeats += 1
        else:
            seen.add(gram)
    return repeats / total


def repetition_score(text: str, rules: RuleConfig | None = None) -> float:
    """0-10 repetition score, 10 meaning no repeated n-grams at all."""
    rules = rules or RuleConfig()
    return 10.0 * (1.0 - _ngram_repeat_fraction(text, rules.ngram_order))


def quality_gate(score: float, threshold: float = 7.0) -> bool:
    """True when the score passes; strictly-below-threshold scores fail."""
    if not (0.0 <= score <= 10.0):
        raise ValidationError(f"quality score out of [0,10]: {score}")
    return score >= threshold


def record_text(record: Mapping) -> str:
    """Text content of a manifest record: all conversation turns joined."""
    turns = record.get("conversations", [])
    return "\n".join(t.get("text", "") for t in turns)


def filter_record(
    record: Mapping,
    rules: RuleConfig | None = None,
    scorer: ScorerClient | None = None,
    thresholds: Thresholds = Thresholds(),
) -> FilterVerdict:
    """Full per-record pipeline producing a keep/drop/review verdict.

    Rule hits drop; repetitive records go to review (manual-review stand-in);
    for text records a configured scorer then gates on quality. A scorer
    outage degrades to the remaining stages rather than failing the record.
    """
    rules = rules or RuleConfig()
    modality = Modality(record.get("modality", "text"))
    text = record_text(record)

    hits = tuple(heuristic_scan(text, rules))
    rep = repetition_score(text, rules)
    quality: float | None = None

    if hits:
        return FilterVerdict(Decision.DROP, hits, None, rep)
    if rep < thresholds.repetition:
        return FilterVerdict(Decision.REVIEW, hits, None, rep)
    if modality == Modality.TEXT and scorer is not None:
        try:
            quality = scorer.score(text, record.get("domain", "general"))
        except ScorerUnavailableError as exc:
            logger.warning("quality scoring degraded for %s: %s", record.get("id"), exc)
        else:
            if not quality_gate(quality, thresholds.quality):
                return FilterVerdict(Decision.DROP, hits, quality, rep)
    return FilterVerdict(Decision.KEEP, hits, quality, rep)


def filter_corpus(
    records: Iterable[Mapping],
    rules: RuleConfig | None = None,
    scorer: ScorerClient | None = None,
    thresholds: Thresholds = Thresholds(),
) -> tuple[list[Mapping], list[Mapping], list[Mapping], dict]:
    """Partition a record stream into (kept, dropped, review) plus a summary.

    Every input record lands in exactly one output list; malformed records
    are dropped with a parse-error tag instead of aborting the run.
    """
    rules = rules or RuleConfig()
    kept: list[Mapping] = []
    dropped: list[Mapping] = []
    review: list[Mapping] = []
    summary: dict = {
        "keep": 0,
        "drop": 0,
        "review": 0,
        "parse_errors": 0,
        "rule_hits": {},
        "config": {
            "max_line_length": rules.max_line_length,
            "min_line_length": rules.min_line_length,
            "max_zero_run": rules.max_zero_run,
            "max_duplicate_line_fraction": rules.max_duplicate_line_fraction,
            "ngram_order": rules.ngram_order,
            "max_ngram_repeat_fraction": rules.max_ngram_repeat_fraction,
            "quality_threshold": thresholds.quality,
            "repetition_threshold": thresholds.repetition,
        },
    }
    for record in records:
        try:
            verdict = filter_record(record, rules, scorer, thresholds)
        except (ValidationError, KeyError, TypeError, AttributeError) as exc:
            out = dict(record) if isinstance(record, Mapping) else {"raw": repr(record)}
            out["filter"] = {"decision": "drop", "error": f"parse_error: {exc}"}
            dropped.append(out)
            summary["drop"] += 1
            summary["parse_errors"] += 1
            continue
        out = dict(record)
        out["filter"] = {
            "decision": verdict.decision.value,
            "rule_hits": [h.rule for h in verdict.rule_hits],
            "quality_score": verdict.quality_score,
            "repetition_score": verdict.repetition_score,
        }
        summary[verdict.decision.value] += 1
        for hit in verdict.rule_hits:
            summary["rule_hits"][hit.rule] = summary["rule_hits"].get(hit.rule, 0) + 1
        {Decision.KEEP: kept, Decision.DROP: dropped, Decision.REVIEW: review}[
            verdict.decision
        ].append(out)
    return kept, dropped, review, summary

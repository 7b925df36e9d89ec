"""Two-agent term extraction with consistency-checked repair.

An extraction agent reads the full license text and emits (sentence, term,
attitude) records as a JSON array. When the same term comes back with
conflicting attitudes across sentences, a repair agent re-analyzes those
terms against the original text; the loop runs for at most three repair
rounds. A clash still standing after that resolves to the most restrictive
attitude so the pipeline never reports false permissiveness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .endpoint import ChatEndpoint, ChatRequest, TransportError, request_key
from .model import (
    Attitude,
    LegalTerm,
    LicenseProfile,
    ProfileSource,
    TermAssignment,
    complete_profile,
    make_profile,
    most_restrictive,
)

MAX_REPAIR_ROUNDS = 3

EXTRACTION_INSTRUCTION = (
    "You are a legal analysis assistant specializing in license agreements. "
    "Your task is to analyze the given text and identify key legal terms, "
    "categorize actions, and infer rules or conditions for these actions. "
    "Always respond in a structured and concise format. Use JSON for output "
    "as specified. Ensure that the output strictly follows the format "
    "provided in the example. Analyze the following license text and "
    "complete the tasks below:"
)

TERM_LIST_INSTRUCTION = (
    "The following is a list of key legal terms and their meanings. For "
    "each term, only consider the provided interpretation when analyzing "
    "the license text. Report a term only when the text takes an explicit "
    "stance on it, and quote the supporting sentence verbatim."
)

REPAIR_INSTRUCTION = (
    "You are a legal analysis assistant specializing in license agreements. "
    "The terms listed below were previously extracted from the license text "
    "with conflicting attitudes. Re-analyze the original text and produce "
    "one consistent attitude per term. Respond with a JSON array in the "
    "same format as the extractions, containing only the listed terms."
)

REASK_INSTRUCTION = (
    "Your previous reply could not be parsed. Respond again with only a "
    "JSON array of objects, each with \"sentence\", \"term\", and "
    "\"attitude\" fields, and no surrounding prose."
)


@dataclass(frozen=True)
class FewShotExample:
    input_text: str
    output: tuple[dict, ...]


DEFAULT_FEW_SHOT = FewShotExample(
    input_text=(
        "You are allowed to distribute modified works. You must give credit "
        "to the original author of the work. You can modify if there are "
        "state changes."
    ),
    output=(
        {"sentence": "You are allowed to distribute modified works", "term": "Distribute", "attitude": "can"},
        {"sentence": "You must give credit to the original author of the work", "term": "Give Credit", "attitude": "must"},
        {"sentence": "You can modify if there are state changes", "term": "Modify", "attitude": "can"},
    ),
)


@dataclass(frozen=True)
class Prompt:
    text: str
    degraded: bool = False


def _render_term_descriptions(taxonomy: Sequence[LegalTerm]) -> str:
    return json.dumps({t.id: t.description for t in taxonomy}, ensure_ascii=False, indent=None)


def build_extraction_prompt(
    text: str,
    taxonomy: Sequence[LegalTerm],
    few_shot: FewShotExample | None = DEFAULT_FEW_SHOT,
) -> Prompt:
    """Assemble the extraction prompt: instructions, the license text, the
    term list with descriptions, then the few-shot exemplar. Deterministic
    for fixed inputs; an empty few-shot set is allowed but flagged degraded.
    """
    if not text.strip():
        raise ValueError("license text is empty")
    sections = [
        f"[Instruction]: {EXTRACTION_INSTRUCTION}",
        f"[The License Content]: {text}",
        f"[Instruction]: {TERM_LIST_INSTRUCTION}",
        f"[Term Descriptions]: {_render_term_descriptions(taxonomy)}",
    ]
    degraded = few_shot is None
    if few_shot is not None:
        sections.append(f"[Example Input]: \"{few_shot.input_text}\"")
        sections.append(f"[Example Output]: {json.dumps(list(few_shot.output), ensure_ascii=False)}")
    return Prompt(text="\n\n".join(sections), degraded=degraded)


def build_repair_prompt(
    text: str,
    clashing: Sequence[TermAssignment],
    taxonomy: Sequence[LegalTerm],
) -> Prompt:
    """Prompt for the repair agent: the conflicting extractions plus the
    original license text (the clashing terms only, not the full round
    output)."""
    if not clashing:
        raise ValueError("no clashing assignments to repair")
    by_id = {t.id: t for t in taxonomy}
    descriptions = {
        a.term: by_id[a.term].description for a in clashing if a.term in by_id
    }
    sections = [
        f"[Instruction]: {REPAIR_INSTRUCTION}",
        f"[Conflicting Extractions]: {render_assignments(clashing)}",
        f"[Term Descriptions]: {json.dumps(descriptions, ensure_ascii=False)}",
        f"[The License Content]: {text}",
    ]
    return Prompt(text="\n\n".join(sections))


def render_assignments(assignments: Sequence[TermAssignment]) -> str:
    """Serialize assignments in the agents' wire shape, one array element
    per evidence sentence."""
    elements = []
    for a in assignments:
        sentences = a.evidence or ("",)
        for sentence in sentences:
            elements.append({"sentence": sentence, "term": a.term, "attitude": a.attitude.value})
    return json.dumps(elements, ensure_ascii=False)


class AgentOutputParseError(ValueError):
    """Model response carried no parsable JSON array."""


class ExtractionFailed(RuntimeError):
    """Parse failure persisted through the automatic re-ask."""


class AgentTransportError(RuntimeError):
    """Endpoint failure; carries the audit trail collected so far."""

    def __init__(self, message: str, audit: list[dict]):
        self.audit = audit
        super().__init__(message)


@dataclass(frozen=True)
class ParseResult:
    assignments: tuple[TermAssignment, ...]
    diagnostics: tuple[str, ...] = ()


def _find_json_array(raw: str):
    candidate = raw.strip()
    if candidate.startswith("["):
        try:
            value = json.loads(candidate)
            if isinstance(value, list):
                return value
        except json.JSONDecodeError:
            pass
    decoder = json.JSONDecoder()
    for index, char in enumerate(raw):
        if char != "[":
            continue
        try:
            value, _ = decoder.raw_decode(raw, index)
        except json.JSONDecodeError:
            continue
        if isinstance(value, list):
            return value
    return None


def parse_agent_output(raw: str, taxonomy: Sequence[LegalTerm]) -> ParseResult:
    """Extract (sentence, term, attitude) records from a model response.

    Tolerates code fences and surrounding prose; unknown terms and invalid
    attitudes are dropped with a diagnostic rather than failing the parse.
    """
    array = _find_json_array(raw)
    if array is None:
        raise AgentOutputParseError("no JSON array found in model response")
    known = {t.id for t in taxonomy}
    assignments: list[TermAssignment] = []
    diagnostics: list[str] = []
    for element in array:
        if not isinstance(element, dict):
            diagnostics.append(f"dropped non-object element: {element!r}")
            continue
        term = element.get("term")
        if term not in known:
            diagnostics.append(f"dropped unknown term: {term!r}")
            continue
        try:
            attitude = Attitude.parse(str(element.get("attitude")))
        except ValueError:
            diagnostics.append(f"dropped invalid attitude for {term!r}: {element.get('attitude')!r}")
            continue
        sentence = element.get("sentence") or ""
        evidence = (sentence,) if sentence else ()
        assignments.append(TermAssignment(term=term, attitude=attitude, evidence=evidence))
    return ParseResult(assignments=tuple(assignments), diagnostics=tuple(diagnostics))


def check_consistency(assignments: Sequence[TermAssignment]) -> list[str]:
    """Term ids assigned two or more distinct attitudes, in first-seen order."""
    seen: dict[str, set[Attitude]] = {}
    order: list[str] = []
    for a in assignments:
        if a.term not in seen:
            seen[a.term] = set()
            order.append(a.term)
        seen[a.term].add(a.attitude)
    return [term for term in order if len(seen[term]) >= 2]


class Consistency(str, Enum):
    CONSISTENT = "consistent"
    REPAIRED_CONSISTENT = "repaired_consistent"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class ExtractionResult:
    profile: LicenseProfile
    raw_model_output: str
    rounds_used: int
    consistency: Consistency


@dataclass
class AgentPipeline:
    """Drives the extraction/repair loop against a chat endpoint."""

    endpoint: ChatEndpoint
    model: str
    temperature: float = 0.0

    def _request(self, prompt: Prompt) -> ChatRequest:
        return ChatRequest(
            model=self.model,
            messages=({"role": "user", "content": prompt.text},),
            temperature=self.temperature,
        )

    def _call(self, role: str, prompt: Prompt, taxonomy: Sequence[LegalTerm], audit: list[dict]) -> ParseResult:
        request = self._request(prompt)
        raw = self._complete(role, request, audit)
        try:
            return parse_agent_output(raw, taxonomy)
        except AgentOutputParseError:
            pass
        # One automatic re-ask on malformed output before failing.
        reask = ChatRequest(
            model=self.model,
            messages=request.messages
            + ({"role": "assistant", "content": raw}, {"role": "user", "content": REASK_INSTRUCTION}),
            temperature=self.temperature,
        )
        raw = self._complete(f"{role}-reask", reask, audit)
        try:
            return parse_agent_output(raw, taxonomy)
        except AgentOutputParseError as exc:
            raise ExtractionFailed(f"{role} output unparsable after re-ask") from exc

    def _complete(self, role: str, request: ChatRequest, audit: list[dict]) -> str:
        entry = {
            "role": role,
            "request_key": request_key(request),
            "temperature": self.temperature,
            "model": self.model,
        }
        try:
            raw = self.endpoint.complete(request)
        except TransportError as exc:
            entry["error"] = str(exc)
            audit.append(entry)
            raise AgentTransportError(str(exc), audit) from exc
        entry["response"] = raw
        audit.append(entry)
        return raw

    def run(
        self,
        text: str,
        taxonomy: Sequence[LegalTerm],
        license_id: str = "Extracted",
        few_shot: FewShotExample | None = DEFAULT_FEW_SHOT,
    ) -> ExtractionResult:
        """Extract, check attitude consistency, repair for up to three
        rounds, then complete the profile over the full taxonomy."""
        audit: list[dict] = []
        parsed = self._call("extraction", build_extraction_prompt(text, taxonomy, few_shot), taxonomy, audit)
        assignments = list(parsed.assignments)
        rounds = 0
        clashing = check_consistency(assignments)
        while clashing and rounds < MAX_REPAIR_ROUNDS:
            rounds += 1
            clash_set = set(clashing)
            conflicting = [a for a in assignments if a.term in clash_set]
            repair = self._call(
                f"repair-{rounds}", build_repair_prompt(text, conflicting, taxonomy), taxonomy, audit
            )
            repaired = [a for a in repair.assignments if a.term in clash_set]
            assignments = [a for a in assignments if a.term not in clash_set] + repaired
            clashing = check_consistency(assignments)
        if clashing:
            consistency = Consistency.INCONSISTENT
        elif rounds == 0:
            consistency = Consistency.CONSISTENT
        else:
            consistency = Consistency.REPAIRED_CONSISTENT
        merged = _merge_per_term(assignments, set(clashing))
        profile = complete_profile(
            make_profile(license_id, merged, source=ProfileSource.EXTRACTED), taxonomy
        )
        return ExtractionResult(
            profile=profile,
            raw_model_output=json.dumps(audit, ensure_ascii=False, indent=2),
            rounds_used=rounds,
            consistency=consistency,
        )


def _merge_per_term(
    assignments: Sequence[TermAssignment], unresolved: set[str]
) -> list[TermAssignment]:
    """Collapse per-sentence records into one assignment per term.

    Terms still clashing after the repair budget resolve to the most
    restrictive attitude; evidence keeps the sentences backing the final
    attitude, in first-seen order.
    """
    by_term: dict[str, list[TermAssignment]] = {}
    order: list[str] = []
    for a in assignments:
        if a.term not in by_term:
            by_term[a.term] = []
            order.append(a.term)
        by_term[a.term].append(a)
    merged = []
    for term in order:
        records = by_term[term]
        attitudes = {r.attitude for r in records}
        attitude = most_restrictive(attitudes) if term in unresolved else records[0].attitude
        evidence: list[str] = []
        for r in records:
            if r.attitude is attitude:
                for sentence in r.evidence:
                    if sentence not in evidence:
                        evidence.append(sentence)
        merged.append(TermAssignment(term=term, attitude=attitude, evidence=tuple(evidence)))
    return merged


def run_agent_pipeline(
    text: str,
    taxonomy: Sequence[LegalTerm],
    endpoint: ChatEndpoint,
    model: str,
    temperature: float = 0.0,
    license_id: str = "Extracted",
    few_shot: FewShotExample | None = DEFAULT_FEW_SHOT,
) -> ExtractionResult:
    pipeline = AgentPipeline(endpoint=endpoint, model=model, temperature=temperature)
    return pipeline.run(text, taxonomy, license_id=license_id, few_shot=few_shot)

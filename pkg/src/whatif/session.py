"""The query workflow: patch generation, safety check, solve, interpret.

One what-if round is an explicit state machine.  The writer step turns the
user query into a patch document; the safeguard step vets the snippets
(provider verdict plus a local grammar gate that fails closed); failures of
any step feed a debug loop that re-asks the writer with the error details,
up to a configurable number of attempts.  Once a patch applies, both models
are solved, the decision-impact report is computed, and the interpreter
step produces the two mandated explanation parts.

With a scripted mock provider the whole run is a pure function of
(model, query, script): transcripts contain no timestamps and solutions are
rendered deterministically.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .graph import GedReport, decision_information
from .model import LinearModel
from .parser import looks_like_constraint_line, looks_like_param_line, parse_model
from .patch import (
    ADD_CONSTRAINT,
    ADD_DATA,
    DELETE_CONSTRAINT,
    PatchError,
    PatchViolation,
    QueryPatch,
    apply_patch,
    extract_patch,
    validate_patch,
)
from .prompts import ged_text, load_asset, render_template, solution_text
from .providers import ChatProvider, ProviderError, ProviderRequest
from .solver import Solution, SolveStatus, solve_milp


class SessionPhase(Enum):
    AWAIT_QUERY = "AwaitQuery"
    WRITER_PATCH = "WriterPatch"
    SAFEGUARD_CHECK = "SafeguardCheck"
    DEBUG = "Debug"
    SOLVE = "Solve"
    INTERPRET = "Interpret"
    DONE = "Done"
    FAILED = "Failed"


ALLOWED_TRANSITIONS: dict[SessionPhase, set[SessionPhase]] = {
    SessionPhase.AWAIT_QUERY: {SessionPhase.WRITER_PATCH},
    SessionPhase.WRITER_PATCH: {
        SessionPhase.SAFEGUARD_CHECK,
        SessionPhase.DEBUG,
        SessionPhase.FAILED,
    },
    SessionPhase.SAFEGUARD_CHECK: {
        SessionPhase.SOLVE,
        SessionPhase.DEBUG,
        SessionPhase.FAILED,
    },
    SessionPhase.DEBUG: {
        SessionPhase.SAFEGUARD_CHECK,
        SessionPhase.DEBUG,
        SessionPhase.FAILED,
    },
    SessionPhase.SOLVE: {
        SessionPhase.INTERPRET,
        SessionPhase.DEBUG,
        SessionPhase.FAILED,
    },
    SessionPhase.INTERPRET: {SessionPhase.DONE, SessionPhase.FAILED},
    SessionPhase.DONE: set(),
    SessionPhase.FAILED: set(),
}


class IllegalTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    shot_mode: str = "zero"  # "zero" or "one"
    debug_limit: int = 3
    example_qa: str | None = None  # worked example used in one-shot mode
    temperature: float = 0.0
    max_tokens: int | None = None
    provider_endpoint: str | None = None
    provider_model: str | None = None
    per_call_timeout_s: float = 60.0
    session_timeout_s: float = 300.0

    def __post_init__(self) -> None:
        if self.shot_mode not in ("zero", "one"):
            raise ValueError(f"shot_mode must be 'zero' or 'one', got {self.shot_mode!r}")
        if self.debug_limit < 0:
            raise ValueError("debug_limit must be >= 0")

    def to_dict(self) -> dict:
        return {
            "shot_mode": self.shot_mode,
            "debug_limit": self.debug_limit,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "provider_endpoint": self.provider_endpoint,
            "provider_model": self.provider_model,
            "per_call_timeout_s": self.per_call_timeout_s,
            "session_timeout_s": self.session_timeout_s,
        }


@dataclass(frozen=True)
class TranscriptEntry:
    role: str  # writer | debug | safeguard | interpreter
    prompt: str
    response: str

    def to_dict(self) -> dict:
        return {"role": self.role, "prompt": self.prompt, "response": self.response}


@dataclass
class SessionState:
    phase: SessionPhase = SessionPhase.AWAIT_QUERY
    retry_count: int = 0
    transcript: list[TranscriptEntry] = field(default_factory=list)
    history: list[SessionPhase] = field(default_factory=list)

    def transition(self, to: SessionPhase, on_phase: Callable | None = None) -> None:
        if to not in ALLOWED_TRANSITIONS[self.phase]:
            raise IllegalTransition(f"{self.phase.value} -> {to.value}")
        self.phase = to
        self.history.append(to)
        if on_phase is not None:
            on_phase(to)


@dataclass(frozen=True)
class SessionOutcome:
    """Everything one what-if round produced, success or not."""

    status: str  # "done" | "failed"
    query: str
    retry_count: int
    transcript: tuple[TranscriptEntry, ...]
    failure_stage: str | None = None
    failure_reason: str | None = None
    patch: QueryPatch | None = None
    updated_source: str | None = None
    original_solution: Solution | None = None
    updated_solution: Solution | None = None
    ged_report: GedReport | None = None
    explanation_correctness: str | None = None
    explanation_results: str | None = None
    impact_rating: int | None = None
    interpreter_parts_found: bool = True

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "query": self.query,
            "retry_count": self.retry_count,
            "failure_stage": self.failure_stage,
            "failure_reason": self.failure_reason,
            "patch": self.patch.to_dict() if self.patch else None,
            "updated_source": self.updated_source,
            "original_solution": (
                self.original_solution.to_dict() if self.original_solution else None
            ),
            "updated_solution": (
                self.updated_solution.to_dict() if self.updated_solution else None
            ),
            "ged_report": self.ged_report.to_dict() if self.ged_report else None,
            "explanation_correctness": self.explanation_correctness,
            "explanation_results": self.explanation_results,
            "impact_rating": self.impact_rating,
            "interpreter_parts_found": self.interpreter_parts_found,
            "transcript": [entry.to_dict() for entry in self.transcript],
        }


@dataclass(frozen=True)
class PromptContext:
    """Everything the writer prompts are rendered from."""

    description: str
    source_code: str
    doc_str: str
    example_qa: str
    execution_result: str
    query: str


def build_prompt_context(
    model: LinearModel, query: str, config: AgentConfig, original_solution: Solution
) -> PromptContext:
    if config.shot_mode == "one":
        example = config.example_qa or load_asset("example_qa")
    else:
        example = "None."
    return PromptContext(
        description=model.description or "(no description provided)",
        source_code=model.source_text,
        doc_str=load_asset("dsl_reference"),
        example_qa=example,
        execution_result=solution_text(original_solution),
        query=query,
    )


def _call(
    provider: ChatProvider,
    role: str,
    system: str,
    user: str,
    config: AgentConfig,
    transcript: list[TranscriptEntry],
) -> str:
    request = ProviderRequest(
        system=system,
        messages=(("user", user),),
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    response = provider.complete(request)
    transcript.append(
        TranscriptEntry(role=role, prompt=system + "\n\n" + user, response=response.text)
    )
    return response.text


def writer_generate_patch(
    context: PromptContext,
    provider: ChatProvider,
    config: AgentConfig,
    transcript: list[TranscriptEntry],
    debug_of: PatchViolation | None = None,
) -> QueryPatch:
    """One writer call: render the prompt (initial or debug re-ask), extract
    the first well-formed patch document from the reply.

    Raises :class:`PatchError` on extraction failure, which feeds the debug
    loop."""
    system = render_template(
        "writer_system",
        description=context.description,
        source_code=context.source_code,
        doc_str=context.doc_str,
        example_qa=context.example_qa,
        execution_result=context.execution_result,
    )
    if debug_of is None:
        role = "writer"
        user = f"User query: {context.query}\n\n" + load_asset("code_prompt")
    else:
        role = "debug"
        user = render_template(
            "debug_prompt",
            error_type=debug_of.kind,
            error_message=debug_of.detail,
        )
    text = _call(provider, role, system, user, config, transcript)
    return extract_patch(text)


_VERDICT_RE = re.compile(r"\b(SAFE|DANGER)\b", re.IGNORECASE)


def static_snippet_gate(patch: QueryPatch) -> str | None:
    """Provider-independent safety gate: every snippet line must be a
    comment, blank, or a line of the grammar for its target region.
    Returns a rejection detail, or None when the patch passes."""
    expectations = {
        ADD_DATA: ("a 'param NAME = <expr>' line", looks_like_param_line),
        ADD_CONSTRAINT: ("a 'NAME: <expr> <relation> <expr>' line", looks_like_constraint_line),
        DELETE_CONSTRAINT: ("a 'NAME: <expr> <relation> <expr>' line", looks_like_constraint_line),
    }
    for key, snippet in patch.snippets().items():
        expected, check = expectations[key]
        for line in snippet.splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if not check(stripped):
                return f"line {stripped!r} under {key!r} is not {expected}"
    return None


def safeguard_check(
    patch: QueryPatch,
    provider: ChatProvider,
    config: AgentConfig,
    transcript: list[TranscriptEntry],
) -> tuple[str, str]:
    """Returns ("SAFE"|"DANGER", detail).

    The provider verdict is SAFE only if the reply contains at least one
    verdict token and every token reads SAFE; anything unparseable counts
    as DANGER (fail closed).  A local grammar gate rejects non-DSL content
    independently of the provider.
    """
    system = render_template("safeguard_system", source_code=patch.raw)
    user = load_asset("safeguard_prompt")
    text = _call(provider, "safeguard", system, user, config, transcript)
    tokens = [t.upper() for t in _VERDICT_RE.findall(text)]
    provider_safe = bool(tokens) and all(t == "SAFE" for t in tokens)
    gate_detail = static_snippet_gate(patch)
    if gate_detail is not None:
        return "DANGER", f"rejected by local gate: {gate_detail}"
    if not provider_safe:
        if not tokens:
            return "DANGER", "safeguard verdict unparseable; failing closed"
        return "DANGER", f"safeguard answered: {text.strip()}"
    return "SAFE", ""


_PART1_RE = re.compile(
    r"\**\s*(?:\(\s*1\s*\)\s*)?explanation of (?:the )?updated code\s*:?\s*\**",
    re.IGNORECASE,
)
_PART2_RE = re.compile(
    r"\**\s*(?:\(\s*2\s*\)\s*)?explanation of (?:the )?query on (?:the )?results\s*:?\s*\**",
    re.IGNORECASE,
)
_RANGE_RE = re.compile(r"(?:from\s+)?\b1\s*(?:to|-|–)\s*10\b", re.IGNORECASE)
_SLASH_TEN_RE = re.compile(r"\b(10|[1-9])\s*/\s*10\b")
_CUE_RE = re.compile(r"impact|scale|rated|rating|quantif", re.IGNORECASE)
_SMALL_INT_RE = re.compile(r"\b(10|[1-9])\b")


def split_interpretation(text: str) -> tuple[str, str, bool]:
    """Split an interpreter reply at the two mandated part headers.  When a
    header is missing, both parts carry the full text and the flag is False."""
    m1 = _PART1_RE.search(text)
    m2 = _PART2_RE.search(text)
    if m1 is None or m2 is None or m2.start() < m1.end():
        return text, text, False
    part1 = text[m1.end() : m2.start()].strip()
    part2 = text[m2.end() :].strip()
    return part1, part2, True


def extract_impact_rating(text: str) -> int | None:
    """Pull the 1..10 impact figure out of prose, ignoring the scale bounds
    themselves ("from 1 to 10")."""
    rating: int | None = None
    for sentence in re.split(r"(?<=[.!?])\s+|\n", text):
        if not _CUE_RE.search(sentence):
            continue
        slash = _SLASH_TEN_RE.search(sentence)
        if slash:
            rating = int(slash.group(1))
            continue
        cleaned = _RANGE_RE.sub(" ", sentence)
        found = _SMALL_INT_RE.findall(cleaned)
        if found:
            rating = int(found[-1])
    return rating


def writer_interpret(
    context: PromptContext,
    provider: ChatProvider,
    config: AgentConfig,
    transcript: list[TranscriptEntry],
    patch: QueryPatch,
    updated_source: str,
    updated_solution: Solution,
    report: GedReport,
) -> tuple[str, str, int | None, bool]:
    """The interpreter call: returns (explanation of the updated code,
    explanation of the results, optional impact rating, parts-found flag).
    The rendered prompt always carries the filled impact-measure figure."""
    system = render_template(
        "interpreter_prompt",
        source_code=context.source_code,
        new_code=updated_source,
        json_data=patch.raw,
        execution_result=context.execution_result,
        execution_rst=solution_text(updated_solution),
        different_model=ged_text(report),
    )
    user = f"User query: {context.query}"
    text = _call(provider, "interpreter", system, user, config, transcript)
    part1, part2, found = split_interpretation(text)
    return part1, part2, extract_impact_rating(part2), found


def commander_run(
    model: LinearModel,
    query: str,
    config: AgentConfig,
    provider: ChatProvider,
    on_phase: Callable[[SessionPhase], None] | None = None,
) -> SessionOutcome:
    """Run the full workflow for one query and return its outcome.

    Never raises past the session boundary: provider failures, debug-limit
    exhaustion, and timeouts all come back as failed outcomes with a
    categorized stage."""
    state = SessionState()
    transcript = state.transcript
    deadline = time.monotonic() + config.session_timeout_s

    original_solution = solve_milp(model)
    context = build_prompt_context(model, query, config, original_solution)

    def fail(stage: str, reason: str) -> SessionOutcome:
        state.transition(SessionPhase.FAILED, on_phase)
        return SessionOutcome(
            status="failed",
            query=query,
            retry_count=state.retry_count,
            transcript=tuple(transcript),
            failure_stage=stage,
            failure_reason=reason,
            original_solution=original_solution,
        )

    pending_debug: PatchViolation | None = None
    patch: QueryPatch | None = None
    updated_source: str | None = None
    updated_model: LinearModel | None = None

    state.transition(SessionPhase.WRITER_PATCH, on_phase)
    while True:
        if time.monotonic() > deadline:
            return fail("timeout", "session wall-clock limit exceeded")
        try:
            patch = writer_generate_patch(
                context, provider, config, transcript, debug_of=pending_debug
            )
        except ProviderError as exc:
            return fail("provider", str(exc))
        except PatchError as exc:
            if state.retry_count >= config.debug_limit:
                return fail("patch-format", str(exc))
            state.retry_count += 1
            pending_debug = exc.violation
            state.transition(SessionPhase.DEBUG, on_phase)
            continue

        state.transition(SessionPhase.SAFEGUARD_CHECK, on_phase)
        try:
            verdict, detail = safeguard_check(patch, provider, config, transcript)
        except ProviderError as exc:
            return fail("provider", str(exc))
        if verdict != "SAFE":
            if state.retry_count >= config.debug_limit:
                return fail("safeguard-danger", detail)
            state.retry_count += 1
            pending_debug = PatchViolation("snippet-parse-error", detail)
            state.transition(SessionPhase.DEBUG, on_phase)
            continue

        state.transition(SessionPhase.SOLVE, on_phase)
        try:
            updated_source = apply_patch(model.source_text, patch)
            updated_model = parse_model(updated_source)
            violations = validate_patch(model, updated_model)
            if violations:
                raise PatchError(violations[0].kind, violations[0].detail)
        except PatchError as exc:
            if state.retry_count >= config.debug_limit:
                return fail(exc.violation.kind, exc.violation.detail)
            state.retry_count += 1
            pending_debug = exc.violation
            state.transition(SessionPhase.DEBUG, on_phase)
            continue
        break

    updated_solution = solve_milp(updated_model)
    if updated_solution.status is SolveStatus.LIMIT:
        return fail("solve-error", "solver budget exhausted on the updated model")
    report = decision_information(model, updated_model)

    state.transition(SessionPhase.INTERPRET, on_phase)
    try:
        part1, part2, rating, found = writer_interpret(
            context,
            provider,
            config,
            transcript,
            patch,
            updated_source,
            updated_solution,
            report,
        )
    except ProviderError as exc:
        return fail("provider", str(exc))

    state.transition(SessionPhase.DONE, on_phase)
    return SessionOutcome(
        status="done",
        query=query,
        retry_count=state.retry_count,
        transcript=tuple(transcript),
        patch=patch,
        updated_source=updated_source,
        original_solution=original_solution,
        updated_solution=updated_solution,
        ged_report=report,
        explanation_correctness=part1,
        explanation_results=part2,
        impact_rating=rating,
        interpreter_parts_found=found,
    )

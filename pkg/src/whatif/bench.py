"""Benchmark loading, accuracy scoring, failure taxonomy, judge scoring.

A dataset file is a JSON document: one problem object (or a list of them)
with ``id``, ``description``, ``model`` (DSL text), ``base_truth``, and
``queries`` of ``{text, truth_label, expected_patch_keys?}``.  A query
counts as correct when the produced objective matches the truth label
after rounding to the nearest integer.  Explanations are judged only for
correct outcomes; judging a wrong result tells you nothing.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .model import LinearModel
from .parser import parse_model
from .patch import PATCH_KEYS
from .prompts import judge_prompt
from .providers import ChatProvider, ProviderError, ProviderRequest
from .session import AgentConfig, SessionOutcome, commander_run
from .solver import SolveStatus

FAILURE_CATEGORIES = (
    "patch-format",
    "logic-error",
    "incomplete-model",
    "apply-error",
    "parse-error",
    "solve-error",
)


@dataclass(frozen=True)
class BenchmarkQuery:
    text: str
    truth_label: float
    expected_patch_keys: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.expected_patch_keys:
            unknown = set(self.expected_patch_keys) - set(PATCH_KEYS)
            if unknown:
                raise ValueError(f"unknown expected patch keys: {sorted(unknown)}")


@dataclass(frozen=True)
class BenchmarkProblem:
    id: str
    description: str
    model_source: str
    base_truth: float
    queries: tuple[BenchmarkQuery, ...]

    def parse(self) -> LinearModel:
        return parse_model(self.model_source)


def _problem_from_dict(data: dict) -> BenchmarkProblem:
    queries = tuple(
        BenchmarkQuery(
            text=q["text"],
            truth_label=float(q["truth_label"]),
            expected_patch_keys=(
                tuple(q["expected_patch_keys"]) if q.get("expected_patch_keys") else None
            ),
        )
        for q in data["queries"]
    )
    problem = BenchmarkProblem(
        id=str(data["id"]),
        description=data.get("description", ""),
        model_source=data["model"],
        base_truth=float(data["base_truth"]),
        queries=queries,
    )
    problem.parse()  # fail fast on an unparseable model
    for q in problem.queries:
        if not _is_finite(q.truth_label):
            raise ValueError(f"problem {problem.id}: non-finite truth label")
    return problem


def _is_finite(x: float) -> bool:
    return x == x and abs(x) != float("inf")


def load_dataset(path: str | Path) -> list[BenchmarkProblem]:
    data = json.loads(Path(path).read_text("utf-8"))
    if isinstance(data, dict) and "problems" in data:
        data = data["problems"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ValueError(f"dataset {path}: expected an object or list of objects")
    return [_problem_from_dict(item) for item in data]


# ---------------------------------------------------------------------------
# accuracy


@dataclass(frozen=True)
class QueryEval:
    problem_id: str
    query_index: int  # 1-based
    status: str  # "correct" | "wrong-result" | "failed"
    produced: float | None
    truth: float
    category: str | None
    outcome: SessionOutcome

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "query_index": self.query_index,
            "status": self.status,
            "produced": self.produced,
            "truth": self.truth,
            "category": self.category,
        }


@dataclass(frozen=True)
class EvalResult:
    entries: tuple[QueryEval, ...]

    @property
    def total(self) -> int:
        return len(self.entries)

    @property
    def correct(self) -> int:
        return sum(1 for e in self.entries if e.status == "correct")

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.entries else 0.0

    def category_counts(self) -> dict[str, int]:
        counts = {cat: 0 for cat in FAILURE_CATEGORIES}
        for e in self.entries:
            if e.category is not None:
                counts[e.category] += 1
        return counts


_STAGE_CATEGORY = {
    "patch-format": "patch-format",
    "safeguard-danger": "patch-format",
    "unknown-key": "patch-format",
    "malformed-document": "patch-format",
    "delete-target-missing": "apply-error",
    "marker-corruption": "apply-error",
    "snippet-parse-error": "parse-error",
    "new-variable-introduced": "parse-error",
    "solve-error": "solve-error",
    "provider": "solve-error",
    "timeout": "solve-error",
}


def classify_failure(outcome: SessionOutcome, query: BenchmarkQuery) -> str:
    """Map a non-correct outcome onto the failure taxonomy.

    Failed sessions classify by the stage that exhausted the debug loop;
    completed sessions with a wrong objective are incomplete-model when the
    patch demonstrably touched fewer regions than the query demanded
    (annotated expected keys), logic errors otherwise."""
    if outcome.status == "failed":
        return _STAGE_CATEGORY.get(outcome.failure_stage or "", "solve-error")
    if query.expected_patch_keys and outcome.patch is not None:
        missing = set(query.expected_patch_keys) - set(outcome.patch.keys())
        if missing:
            return "incomplete-model"
    return "logic-error"


SessionRunner = Callable[[BenchmarkProblem, int, LinearModel, str], SessionOutcome]


def run_accuracy(
    dataset: Sequence[BenchmarkProblem],
    runner: SessionRunner,
    parallelism: int = 1,
) -> EvalResult:
    """Run every query of every problem and score the outcomes.

    The aggregate is order-independent; queries may run concurrently up to
    ``parallelism`` because sessions are isolated."""
    tasks: list[tuple[BenchmarkProblem, int, LinearModel, BenchmarkQuery]] = []
    for problem in dataset:
        model = problem.parse()
        for index, query in enumerate(problem.queries, start=1):
            tasks.append((problem, index, model, query))

    def run_one(task) -> QueryEval:
        problem, index, model, query = task
        outcome = runner(problem, index, model, query.text)
        produced = None
        if (
            outcome.status == "done"
            and outcome.updated_solution is not None
            and outcome.updated_solution.status is SolveStatus.OPTIMAL
        ):
            produced = outcome.updated_solution.objective
        if produced is not None and round(produced) == round(query.truth_label):
            status, category = "correct", None
        elif outcome.status == "failed":
            status, category = "failed", classify_failure(outcome, query)
        else:
            status, category = "wrong-result", classify_failure(outcome, query)
        return QueryEval(
            problem_id=problem.id,
            query_index=index,
            status=status,
            produced=produced,
            truth=query.truth_label,
            category=category,
            outcome=outcome,
        )

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            entries = list(pool.map(run_one, tasks))
    else:
        entries = [run_one(task) for task in tasks]
    return EvalResult(entries=tuple(entries))


# ---------------------------------------------------------------------------
# judge scoring


class JudgeError(ValueError):
    pass


@dataclass(frozen=True)
class JudgeScores:
    """Per-method (ec, er, overall) triples for one judged query."""

    scores: Mapping[str, tuple[float, float, float]]

    def to_dict(self) -> dict:
        return {label: list(triple) for label, triple in self.scores.items()}


def _strict_json_object(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("```"):
        stripped = stripped.strip("`")
        first_newline = stripped.find("\n")
        if first_newline >= 0:
            stripped = stripped[first_newline + 1 :]
    try:
        data = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise JudgeError(f"judge response is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise JudgeError("judge response is not a JSON object")
    return data


def judge_explanations(
    query: str, explanations: Mapping[str, str], provider: ChatProvider
) -> JudgeScores:
    """Score explanation quality per method label via the judge prompt.

    The label set is arbitrary; the response must contain exactly those
    labels, each with three scores in [0, 10], or the whole judgment is
    rejected."""
    if not explanations:
        raise JudgeError("at least one method label is required")
    prompt = judge_prompt(query, dict(explanations))
    try:
        response = provider.complete(
            ProviderRequest(system=prompt, messages=(("user", "Return the JSON scores now."),))
        )
    except ProviderError as exc:
        raise JudgeError(f"judge provider failed: {exc}") from exc
    data = _strict_json_object(response.text)
    if set(data) != set(explanations):
        raise JudgeError(
            f"judge keys {sorted(data)} do not match method labels {sorted(explanations)}"
        )
    scores: dict[str, tuple[float, float, float]] = {}
    for label, triple in data.items():
        if (
            not isinstance(triple, list)
            or len(triple) != 3
            or not all(isinstance(v, (int, float)) for v in triple)
        ):
            raise JudgeError(f"scores for {label!r} are not a list of three numbers")
        if not all(0 <= v <= 10 for v in triple):
            raise JudgeError(f"scores for {label!r} fall outside 0..10: {triple}")
        scores[label] = (float(triple[0]), float(triple[1]), float(triple[2]))
    return JudgeScores(scores=scores)


def mean_judge_scores(
    per_query: Sequence[JudgeScores],
) -> dict[str, tuple[float, float, float]]:
    sums: dict[str, list[float]] = {}
    counts: dict[str, int] = {}
    for judged in per_query:
        for label, triple in judged.scores.items():
            acc = sums.setdefault(label, [0.0, 0.0, 0.0])
            for i in range(3):
                acc[i] += triple[i]
            counts[label] = counts.get(label, 0) + 1
    return {
        label: tuple(v / counts[label] for v in acc) for label, acc in sums.items()
    }


# ---------------------------------------------------------------------------
# the full benchmark run


ProviderFactory = Callable[[str, int], ChatProvider]


@dataclass(frozen=True)
class BenchReport:
    result: EvalResult
    judge_means: dict[str, tuple[float, float, float]] | None
    judged_queries: int
    judge_failures: int

    def transcripts_document(self) -> str:
        """Deterministic serialization of all session transcripts, for
        byte-level comparison across runs."""
        doc = [
            {
                "problem_id": entry.problem_id,
                "query_index": entry.query_index,
                "transcript": [t.to_dict() for t in entry.outcome.transcript],
            }
            for entry in self.result.entries
        ]
        return json.dumps(doc, sort_keys=True, indent=1)


def run_benchmark(
    dataset: Sequence[BenchmarkProblem],
    config: AgentConfig,
    provider_factory: ProviderFactory,
    judge_provider_factory: ProviderFactory | None = None,
    method_label: str = "whatif",
    parallelism: int = 1,
) -> BenchReport:
    """Accuracy pass plus (optionally) judged explanation quality.

    ``provider_factory(problem_id, query_index)`` supplies a provider per
    session, which keeps scripted runs isolated and deterministic."""

    def runner(problem, index, model, text):
        return commander_run(model, text, config, provider_factory(problem.id, index))

    result = run_accuracy(dataset, runner, parallelism=parallelism)

    judge_means = None
    judged = 0
    failures = 0
    if judge_provider_factory is not None:
        per_query: list[JudgeScores] = []
        by_problem = {p.id: p for p in dataset}
        for entry in result.entries:
            if entry.status != "correct":
                continue
            outcome = entry.outcome
            text = "\n\n".join(
                part
                for part in (
                    outcome.explanation_correctness,
                    outcome.explanation_results,
                )
                if part
            )
            query_text = by_problem[entry.problem_id].queries[entry.query_index - 1].text
            try:
                per_query.append(
                    judge_explanations(
                        query_text,
                        {method_label: text or "(no explanation produced)"},
                        judge_provider_factory(entry.problem_id, entry.query_index),
                    )
                )
                judged += 1
            except JudgeError:
                failures += 1
        judge_means = mean_judge_scores(per_query) if per_query else {}
    return BenchReport(
        result=result,
        judge_means=judge_means,
        judged_queries=judged,
        judge_failures=failures,
    )


def format_report(report: BenchReport) -> str:
    """Human-readable accuracy table with failure categories and, when
    judged, mean explanation-quality scores."""
    result = report.result
    width = max([len("problem")] + [len(e.problem_id) for e in result.entries])
    lines = [
        f"accuracy {result.correct}/{result.total} ({result.accuracy:.2%})",
        "",
        f"{'problem':<{width}} {'query':>5} {'status':<12} {'produced':>12} {'truth':>12}  category",
    ]
    for e in result.entries:
        produced = "-" if e.produced is None else f"{round(e.produced)}"
        lines.append(
            f"{e.problem_id:<{width}} {e.query_index:>5} {e.status:<12} "
            f"{produced:>12} {round(e.truth):>12}  {e.category or '-'}"
        )
    counts = result.category_counts()
    if any(counts.values()):
        lines.append("")
        lines.append("failure categories:")
        for category in FAILURE_CATEGORIES:
            if counts[category]:
                lines.append(f"  {category:<18} {counts[category]}")
    if report.judge_means is not None:
        lines.append("")
        lines.append(
            f"explanation quality over {report.judged_queries} judged queries "
            f"({report.judge_failures} judge failures):"
        )
        lines.append(f"  {'method':<12} {'EC':>6} {'ER':>6} {'Overall':>8}")
        for label, (ec, er, overall) in sorted(report.judge_means.items()):
            lines.append(f"  {label:<12} {ec:>6.2f} {er:>6.2f} {overall:>8.2f}")
    return "\n".join(lines)

"""Prompt template assets and deterministic text rendering.

Templates live as text files under ``whatif/templates`` and use
``{snake_case}`` placeholders.  Rendering substitutes every placeholder in
one pass and fails loudly on a missing value, so a rendered prompt can
never carry unfilled residue.
"""

from __future__ import annotations

import re
from importlib import resources

from .graph import GedReport
from .model import format_number
from .solver import Solution, SolveStatus

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")

TEMPLATE_NAMES = (
    "writer_system",
    "code_prompt",
    "debug_prompt",
    "interpreter_prompt",
    "safeguard_system",
    "safeguard_prompt",
    "judge_prompt",
)


def load_template(name: str) -> str:
    return (
        resources.files("whatif").joinpath("templates", f"{name}.txt").read_text("utf-8")
    )


def load_asset(name: str) -> str:
    return load_template(name)


def render_text(template: str, **values: str) -> str:
    def substitute(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise KeyError(f"no value supplied for placeholder {{{key}}}")
        return str(values[key])

    return _PLACEHOLDER_RE.sub(substitute, template)


def render_template(name: str, **values: str) -> str:
    return render_text(load_template(name), **values)


def placeholders_of(template: str) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(template))


def solution_text(solution: Solution) -> str:
    """Execution-result text for prompts: deterministic, no timings."""
    if solution.status is SolveStatus.OPTIMAL:
        lines = [f"Optimal objective: {format_number(solution.objective)}"]
        lines.extend(
            f"{name} = {format_number(value)}"
            for name, value in solution.assignment.items()
        )
        return "\n".join(lines)
    if solution.status is SolveStatus.INFEASIBLE:
        return "No optimal solution found. (status: Infeasible)"
    if solution.status is SolveStatus.UNBOUNDED:
        return "No optimal solution found. (status: Unbounded)"
    if solution.objective is not None:
        return (
            "Search budget exhausted; best objective found so far: "
            f"{format_number(solution.objective)}"
        )
    return "Search budget exhausted with no feasible point found. (status: Limit)"


def ged_text(report: GedReport) -> str:
    return report.summary_text()


def judge_prompt(query: str, explanations: dict[str, str]) -> str:
    """Render the explanation-quality judging prompt for any set of method
    labels (the label set is caller-defined, not fixed)."""
    sections = []
    for label, text in explanations.items():
        sections.append(f"    - Explanations by {label}: {text}")
    return render_template(
        "judge_prompt",
        method_names=", ".join(f"`{label}`" for label in explanations),
        query=query,
        method_sections="\n".join(sections),
    )

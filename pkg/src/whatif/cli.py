"""Command-line interface: solve, diff, ask, bench, serve.

Exit codes: 0 on success, 1 on domain errors (bad model, failed patch,
provider trouble), 2 on usage errors.  Provider credentials come from the
``EOR_PROVIDER_KEY`` environment variable; endpoint and model name can be
given by flags or a JSON config file.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import format_report, load_dataset, run_benchmark
from .graph import decision_information
from .model import format_number
from .parser import ParseError, parse_model
from .patch import PatchError
from .providers import (
    HttpChatProvider,
    MockProvider,
    ProviderError,
    resolve_mock_script,
)
from .session import AgentConfig, commander_run
from .solver import solve_milp

DOMAIN_ERRORS = (
    ParseError,
    PatchError,
    ProviderError,
    ValueError,
    OSError,
    json.JSONDecodeError,
)


def _read(path: str) -> str:
    return Path(path).read_text("utf-8")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(_read(path))
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return data


def _agent_config(settings: dict, **overrides) -> AgentConfig:
    values = {
        key: value
        for key, value in settings.items()
        if key in AgentConfig.__dataclass_fields__
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return AgentConfig(**values)


def _provider_factory(mock: str | None, config: AgentConfig, key_hint: str | None = None):
    """Build a zero-argument provider factory for one session key."""
    if mock is not None:
        script = resolve_mock_script(mock, key_hint)
        return lambda: MockProvider(
            {step: list(responses) for step, responses in script.items()}
        )
    if not config.provider_endpoint or not config.provider_model:
        raise ValueError(
            "no provider configured: pass --mock, or --provider-url and "
            "--provider-model (or a config file with provider_endpoint/provider_model)"
        )
    return lambda: HttpChatProvider(
        endpoint=config.provider_endpoint,
        model=config.provider_model,
        timeout_s=config.per_call_timeout_s,
    )


def _run(body):
    try:
        return body()
    except DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@click.group()
def main() -> None:
    """What-if analysis workbench for linear and integer optimization models."""


@main.command()
@click.argument("model_path", type=click.Path(exists=True))
def solve(model_path: str) -> None:
    """Solve a model file and print the outcome."""

    def body():
        solution = solve_milp(parse_model(_read(model_path)))
        objective = "" if solution.objective is None else f" {solution.objective:g}"
        click.echo(f"{solution.status.value}{objective}")
        for name, value in solution.assignment.items():
            click.echo(f"  {name} = {format_number(value)}")

    _run(body)


@main.command()
@click.argument("model_a", type=click.Path(exists=True))
@click.argument("model_b", type=click.Path(exists=True))
def diff(model_a: str, model_b: str) -> None:
    """Print the decision-impact report between two model files."""

    def body():
        report = decision_information(
            parse_model(_read(model_a)), parse_model(_read(model_b))
        )
        click.echo(f"GED={report.ged} NGED={report.nged:.3f}")
        for key, count in sorted(report.breakdown.items()):
            if count:
                click.echo(f"  {key}: {count}")

    _run(body)


@main.command()
@click.argument("model_path", type=click.Path(exists=True))
@click.option("--query", required=True, help="The what-if question to answer.")
@click.option("--mock", type=click.Path(exists=True), help="Scripted mock provider (file or directory).")
@click.option("--provider-url", help="Chat-completions endpoint URL.")
@click.option("--provider-model", help="Model name sent to the provider.")
@click.option("--one-shot", "one_shot", type=click.Path(exists=True), help="Worked example file; enables one-shot mode.")
@click.option("--debug-limit", type=int, default=None, help="Debug attempts before giving up (default 3).")
@click.option("--temperature", type=float, default=None, help="Provider temperature (default 0).")
@click.option("--config", "config_path", type=click.Path(exists=True), help="JSON config file.")
def ask(model_path, query, mock, provider_url, provider_model, one_shot, debug_limit, temperature, config_path):
    """Run one what-if query against a model and print the outcome."""

    def body():
        settings = _load_config_file(config_path)
        config = _agent_config(
            settings,
            provider_endpoint=provider_url,
            provider_model=provider_model,
            debug_limit=debug_limit,
            temperature=temperature,
            shot_mode="one" if one_shot else None,
            example_qa=_read(one_shot) if one_shot else None,
        )
        model = parse_model(_read(model_path))
        provider = _provider_factory(mock, config)()
        outcome = commander_run(model, query, config, provider)
        if outcome.status == "failed":
            click.echo(
                f"failed at {outcome.failure_stage}: {outcome.failure_reason}", err=True
            )
            sys.exit(1)
        click.echo("patch:")
        for key, snippet in outcome.patch.snippets().items():
            click.echo(f"  {key}:")
            for line in snippet.splitlines():
                click.echo(f"    {line}")
        original = outcome.original_solution
        updated = outcome.updated_solution
        click.echo(f"original: {original.status.value} {original.objective:g}")
        if updated.objective is not None:
            click.echo(f"updated:  {updated.status.value} {updated.objective:g}")
        else:
            click.echo(f"updated:  {updated.status.value}")
        click.echo(f"decision information: GED={outcome.ged_report.ged} NGED={outcome.ged_report.nged:.3f}")
        if outcome.impact_rating is not None:
            click.echo(f"impact rating: {outcome.impact_rating}/10")
        click.echo("")
        click.echo("explanation of the updated model:")
        click.echo(outcome.explanation_correctness)
        click.echo("")
        click.echo("explanation of the results:")
        click.echo(outcome.explanation_results)

    _run(body)


@main.command()
@click.argument("dataset_path", type=click.Path(exists=True))
@click.option("--mock", type=click.Path(exists=True), help="Directory of per-query mock scripts (q1.json, ...).")
@click.option("--provider-url", help="Chat-completions endpoint URL.")
@click.option("--provider-model", help="Model name sent to the provider.")
@click.option("--judge/--no-judge", default=True, help="Also score explanation quality.")
@click.option("--method-label", default="whatif", show_default=True, help="Label under which explanations are judged.")
@click.option("--one-shot", "one_shot", type=click.Path(exists=True), help="Worked example file; enables one-shot mode.")
@click.option("--debug-limit", type=int, default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--parallelism", type=int, default=1, show_default=True)
@click.option("--dump-transcripts", type=click.Path(), help="Write all session transcripts to this file.")
@click.option("--config", "config_path", type=click.Path(exists=True), help="JSON config file.")
def bench(dataset_path, mock, provider_url, provider_model, judge, method_label, one_shot, debug_limit, temperature, parallelism, dump_transcripts, config_path):
    """Run a benchmark dataset and print the accuracy/quality report."""

    def body():
        settings = _load_config_file(config_path)
        config = _agent_config(
            settings,
            provider_endpoint=provider_url,
            provider_model=provider_model,
            debug_limit=debug_limit,
            temperature=temperature,
            shot_mode="one" if one_shot else None,
            example_qa=_read(one_shot) if one_shot else None,
        )
        dataset = load_dataset(dataset_path)

        def factory(problem_id: str, index: int):
            if mock is not None:
                root = Path(mock)
                scoped = root / problem_id
                source = scoped if scoped.is_dir() else root
                return MockProvider(resolve_mock_script(source, f"q{index}"))
            return _provider_factory(None, config)()

        report = run_benchmark(
            dataset,
            config,
            factory,
            judge_provider_factory=factory if judge else None,
            method_label=method_label,
            parallelism=parallelism,
        )
        click.echo(format_report(report))
        if dump_transcripts:
            Path(dump_transcripts).write_text(report.transcripts_document(), "utf-8")
            click.echo(f"transcripts written to {dump_transcripts}")
        if report.result.correct < report.result.total:
            sys.exit(1)

    _run(body)


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--mock", type=click.Path(exists=True), help="Scripted mock provider (file or directory).")
@click.option("--provider-url", help="Chat-completions endpoint URL.")
@click.option("--provider-model", help="Model name sent to the provider.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), help="Serve a built frontend directory at /ui.")
@click.option("--config", "config_path", type=click.Path(exists=True), help="JSON config file.")
def serve(port, host, mock, provider_url, provider_model, ui_dir, config_path):
    """Run the HTTP service."""

    def body():
        import uvicorn
        from fastapi.staticfiles import StaticFiles

        from .service import create_app

        settings = _load_config_file(config_path)
        config = _agent_config(
            settings, provider_endpoint=provider_url, provider_model=provider_model
        )
        factory = _provider_factory(mock, config)
        app = create_app(factory, config)
        if ui_dir:
            app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
        uvicorn.run(app, host=host, port=port)

    _run(body)


if __name__ == "__main__":
    main()

"""Command line interface.

The backend is picked from the environment: if GW_CHAT_URL is set, the
HTTP backend is used, otherwise a deterministic mock backend so commands
stay runnable offline (answers will be canned).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from duomem.dataset.builder import BuilderParams, DatasetBuilder
from duomem.dataset.loader import load_dataset
from duomem.errors import DuomemError
from duomem.evaluation import Evaluator, RunSpec
from duomem.gateway.core import Gateway
from duomem.gateway.http import HttpBackend, HttpBackendConfig
from duomem.gateway.mock import MockBackend
from duomem.memory.snapshot import restore, snapshot
from duomem.pipeline import DialogueTurn, PipelineConfig, Query, Session


def build_gateway() -> Gateway:
    if os.environ.get("GW_CHAT_URL"):
        return Gateway(HttpBackend(HttpBackendConfig.from_env()))
    return Gateway(MockBackend(strict=False))


def _load_session(gateway: Gateway, state_file: str) -> Session:
    session = Session(gateway, PipelineConfig(), session_id="cli")
    path = Path(state_file)
    if path.exists():
        session.memory = restore(path.read_text())
    return session


def _save_session(session: Session, state_file: str) -> None:
    Path(state_file).write_text(snapshot(session.memory))


_ablation_flags = [
    click.option("--no-ds", is_flag=True, help="Disable the dynamic buffer."),
    click.option("--no-sp", is_flag=True, help="Disable the static store."),
    click.option("--no-memory", is_flag=True, help="Disable both memories."),
    click.option("--no-align", is_flag=True, help="Skip the alignment step."),
    click.option("--no-retrieval", is_flag=True, help="Use all items, no retrieval."),
]


def with_ablations(fn):
    for flag in reversed(_ablation_flags):
        fn = flag(fn)
    return fn


def _config(**kwargs) -> PipelineConfig:
    return PipelineConfig(
        no_ds=kwargs.pop("no_ds", False),
        no_sp=kwargs.pop("no_sp", False),
        no_memory=kwargs.pop("no_memory", False),
        no_align=kwargs.pop("no_align", False),
        no_retrieval=kwargs.pop("no_retrieval", False),
        **kwargs,
    )


@click.group()
def main() -> None:
    """Personalized-memory dialogue engine."""


@main.command()
@click.option("--state", default="duomem_session.json", show_default=True)
@click.option("--user", "user_text", required=True)
@click.option("--assistant", "assistant_text", default="")
@click.option("--image", "image_file", type=click.Path(exists=True), default=None)
@click.option("--concept", "concept_id", default=None)
def ingest(state, user_text, assistant_text, image_file, concept_id) -> None:
    """Ingest one dialogue turn into the session memory."""
    gateway = build_gateway()
    session = _load_session(gateway, state)
    try:
        events = session.ingest_turn(
            DialogueTurn(
                user_text=user_text,
                assistant_text=assistant_text,
                image=image_file,
                turn_id=1,
                concept_id=concept_id,
            )
        )
    except DuomemError as exc:
        raise click.ClickException(str(exc))
    _save_session(session, state)
    click.echo(json.dumps(events, indent=2))


@main.command()
@click.option("--state", default="duomem_session.json", show_default=True)
@click.option("--image", "image_file", type=click.Path(exists=True), default=None)
@click.option("--trace/--no-trace", default=False)
@with_ablations
@click.argument("question")
def ask(state, image_file, trace, question, **ablations) -> None:
    """Answer a question against the stored memory."""
    gateway = build_gateway()
    session = _load_session(gateway, state)
    session.config = _config(**ablations)
    try:
        answer, trace_doc = session.run_query(Query(text=question, image=image_file))
    except DuomemError as exc:
        raise click.ClickException(str(exc))
    _save_session(session, state)
    click.echo(answer)
    if trace:
        click.echo(json.dumps(trace_doc, indent=2, sort_keys=True))


@main.group()
def memory() -> None:
    """Inspect session memory."""


@memory.command("show")
@click.option("--state", default="duomem_session.json", show_default=True)
def memory_show(state) -> None:
    path = Path(state)
    if not path.exists():
        raise click.ClickException(f"no session state at {state}")
    click.echo(path.read_text().rstrip("\n"))


@main.command("eval")
@click.option("--system", type=click.Choice(["engine", "baseline"]), default="engine")
@click.option("--dataset", "dataset_root", required=True, type=click.Path(exists=True))
@click.option("--split", type=click.Choice(["easy", "hard", "both"]), default="both")
@click.option(
    "--format", "answer_format", type=click.Choice(["choice", "free_text"]),
    default="choice", show_default=True,
)
@click.option("--mode", type=click.Choice(["cross_modal", "text_text"]), default="cross_modal")
@click.option("--workers", type=int, default=1)
@click.option("--out", type=click.Path(), default=None, help="Write the JSON report here.")
@with_ablations
def eval_cmd(system, dataset_root, split, answer_format, mode, workers, out, **ablations) -> None:
    """Run an evaluation and print the metrics table."""
    gateway = build_gateway()
    spec = RunSpec(
        system=system,
        dataset_root=dataset_root,
        split=split,
        answer_format=answer_format,
        workers=workers,
        config=_config(scoring_mode=mode, **ablations),
    )
    report = Evaluator(gateway).run(spec)
    click.echo(report.to_table())
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    if report.errors:
        click.echo(f"{report.errors} question(s) failed", err=True)
        sys.exit(1)


@main.group()
def dataset() -> None:
    """Build or validate benchmark datasets."""


@dataset.command("build")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--concepts", "n_concepts", type=int, default=3, show_default=True)
@click.option("--dialogues", type=int, default=BuilderParams.n_dialogues)
@click.option("--easy", type=int, default=BuilderParams.n_easy)
@click.option("--hard", type=int, default=BuilderParams.n_hard)
def dataset_build(out_dir, n_concepts, dialogues, easy, hard) -> None:
    from duomem.dataset.schema import CATEGORIES
    from duomem.images import placeholder_png

    gateway = build_gateway()
    params = BuilderParams(n_dialogues=dialogues, n_easy=easy, n_hard=hard)
    builder = DatasetBuilder(gateway, params)
    raw_images = [
        (placeholder_png(f"c{i}_raw"), f"c{i}", CATEGORIES[i % len(CATEGORIES)])
        for i in range(1, n_concepts + 1)
    ]
    try:
        built = builder.build(raw_images, out_dir)
    except DuomemError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(built.counts(), indent=2))


@dataset.command("validate")
@click.argument("root", type=click.Path(exists=True))
def dataset_validate(root) -> None:
    try:
        ds = load_dataset(root)
    except DuomemError as exc:
        raise click.ClickException(str(exc))
    for warning in ds.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(json.dumps(ds.counts(), indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8642, show_default=True)
@click.option("--state-dir", default="duomem_state", show_default=True)
def serve(host, port, state_dir) -> None:
    """Start the HTTP service."""
    import uvicorn

    from duomem.service import create_app

    uvicorn.run(create_app(build_gateway(), state_dir), host=host, port=port)


if __name__ == "__main__":
    main()

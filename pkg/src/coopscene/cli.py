"""Command-line client for the stack: sim runs, QA generation, eval, service."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import backend_from_config
from .bus import load_scenes, render_scene
from .evaluation import BackendUnreachable, run_eval, write_records
from .pipeline import ChainPipeline, StageError
from .prompts import PromptSet
from .qagen import default_templates, generate_dataset, load_dataset, load_templates, write_dataset
from .stack import ScenePipeline
from .traffic import SimConfig


@click.group()
def main():
    """Cooperative-perception scene service with natural-language querying."""


@main.group()
def sim():
    """Traffic simulation and scene stream generation."""


@sim.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="SimConfig JSON")
@click.option("--out", "out_path", required=True, help="output JSONL file (or directory)")
@click.option("--duration", type=float, default=None, help="override sim duration in seconds")
def sim_run(config_path, out_path, duration):
    """Run the sim and write one linguistic scene JSON per line."""
    cfg = SimConfig.from_json(config_path) if config_path else SimConfig()
    out = Path(out_path)
    if out_path.endswith("/") or out.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        out = out / "scenes.jsonl"
    pipeline = ScenePipeline(cfg)
    count = 0
    with open(out, "w") as f:
        for scene in pipeline.run(duration):
            f.write(render_scene(scene) + "\n")
            count += 1
    click.echo(f"wrote {count} scenes to {out}")


@main.group()
def qa():
    """QA dataset generation."""


@qa.command("generate")
@click.option("--scenes", "scenes_path", type=click.Path(exists=True), required=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True), default=None)
@click.option("-n", "count", type=int, default=10000)
@click.option("--seed", type=int, default=1)
@click.option("--no-prefix", is_flag=True, help="omit the 100-meter question prefix")
@click.option("--out", "out_path", default="qa.jsonl")
def qa_generate(scenes_path, templates_path, count, seed, no_prefix, out_path):
    """Instantiate QA pairs over a scene stream."""
    scenes = load_scenes(scenes_path)
    templates = load_templates(templates_path) if templates_path else default_templates()
    pairs, report = generate_dataset(scenes, templates, n=count, seed=seed, prefix_on=not no_prefix)
    write_dataset(pairs, out_path)
    click.echo(report.render_text())
    click.echo(f"wrote {len(pairs)} pairs to {out_path}")


@main.group(name="eval")
def eval_group():
    """Evaluation runs and reports."""


@eval_group.command("run")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--scenes", "scenes_path", type=click.Path(exists=True), required=True)
@click.option("--pipeline", type=click.Choice(["cop", "osp1", "osp2", "osp3", "osp4"]), default="cop")
@click.option("--backend", "backend_path", type=click.Path(exists=True), required=True, help="backend config JSON")
@click.option("--no-prefix", is_flag=True, help="strip the 100-meter prefix before answering")
@click.option("--no-rule", is_flag=True, help="drop the restrictive existence rule from the classification prompt")
@click.option("--report", "report_path", default=None, help="write the JSON report here")
@click.option("--records", "records_path", default=None, help="write grade records JSONL here")
def eval_run(dataset_path, scenes_path, pipeline, backend_path, no_prefix, no_rule, report_path, records_path):
    """Answer and grade every pair of a dataset."""
    dataset = load_dataset(dataset_path)
    scenes_by_id = {s.scene_id: s for s in load_scenes(scenes_path)}
    backend = backend_from_config(backend_path)
    kind, variant = ("cop", 1) if pipeline == "cop" else ("osp", int(pipeline[-1]))
    try:
        report, records = run_eval(
            dataset,
            scenes_by_id,
            backend,
            pipeline=kind,
            osp_variant=variant,
            strip_prefix=no_prefix,
            rule_on=not no_rule,
        )
    except BackendUnreachable as e:
        if records_path:
            write_records(e.records, records_path)
            click.echo(f"partial records ({len(e.records)}) -> {records_path}", err=True)
        raise click.ClickException(str(e))
    click.echo(report.render_table())
    lat = report.latency_ms.get("total", {})
    if lat.get("n"):
        click.echo(f"latency total ms: mean {lat['mean']:.1f}  p50 {lat['p50']:.1f}  p95 {lat['p95']:.1f}")
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))
        click.echo(f"report -> {report_path}")
    if records_path:
        write_records(records, records_path)
        click.echo(f"records -> {records_path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="ServiceConfig JSON")
def serve(config_path):
    """Run the HTTP service (sim, scene stream, query endpoint)."""
    import uvicorn

    from .service import ServiceConfig, create_app

    cfg = ServiceConfig.from_json(config_path) if config_path else ServiceConfig()
    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")


@main.command()
@click.argument("question")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="SimConfig JSON")
@click.option("--backend", "backend_path", type=click.Path(exists=True), default=None, help="backend config JSON")
@click.option("--ego", "ego_id", default=None)
@click.option("--warmup", type=float, default=5.0, help="sim seconds before asking")
def ask(question, config_path, backend_path, ego_id, warmup):
    """One-shot query against a locally simulated scene."""
    cfg = SimConfig.from_json(config_path) if config_path else SimConfig()
    pipeline = ScenePipeline(cfg)
    scene = None
    for scene in pipeline.run(warmup):
        pass
    if scene is None:
        raise click.ClickException("simulation produced no scene")
    ego = ego_id or (scene.av_ids()[0] if scene.av_ids() else None)
    if ego is None:
        raise click.ClickException("no AV present in the scene")

    def answer_with(backend):
        chain = ChainPipeline(PromptSet(), backend)
        return chain.answer(question, scene, ego)

    try:
        if backend_path:
            result = answer_with(backend_from_config(backend_path))
        else:
            # no backend configured: answer through a local stub endpoint
            from .backends import RemoteBackend
            from .llmstub import StubServer

            with StubServer() as stub:
                result = answer_with(RemoteBackend(endpoint=stub.endpoint, model="rule-stub"))
    except StageError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    click.echo(json.dumps(result.to_dict(), indent=2))


@main.command(name="llm-stub")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8099)
def llm_stub(host, port):
    """Serve the rule-based chat-completion stub endpoint."""
    from .llmstub import serve as stub_serve

    stub_serve(host, port)


if __name__ == "__main__":
    main()

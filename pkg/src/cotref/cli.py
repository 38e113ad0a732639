"""Command-line entry points.

Grammar: ``cotref <stage> --config cfg --in FILE --out FILE [--backend
mock|live] [--seed N] [--concurrency N]`` plus ``ingest``, ``eval`` and
``serve-review``. Exit codes: 0 success, 1 terminal error, 2 partial/resumable.
"""

from __future__ import annotations

import json
import sys

import click

from .config import load_config
from .evaluation import join_predictions, stratified_report
from .ingest import ingest as run_ingest
from .pipeline import EXIT_ERROR, STAGES, run_stage, write_manifest
from .records import read_jsonl, write_jsonl


def _common_options(fn):
    fn = click.option("--config", "config_path", default=None,
                      help="YAML config file")(fn)
    fn = click.option("--in", "in_path", required=True, help="input file")(fn)
    fn = click.option("--out", "out_path", required=True, help="output file")(fn)
    fn = click.option("--backend", type=click.Choice(["mock", "live"]),
                      default="mock")(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option("--concurrency", type=int, default=None)(fn)
    return fn


@click.group()
def main() -> None:
    """Chain-of-thought referring data pipeline."""


def _make_stage_command(stage: str):
    @main.command(name=stage)
    @_common_options
    @click.option("--decisions", "decisions_path", default=None,
                  help="decision log (build-benchmark only)")
    def _cmd(config_path, in_path, out_path, backend, seed, concurrency,
             decisions_path, _stage=stage):
        config = load_config(config_path)
        try:
            result = run_stage(_stage, config, in_path, out_path,
                               backend=backend, seed=seed,
                               concurrency=concurrency,
                               decisions_path=decisions_path)
        except (FileNotFoundError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_ERROR)
        click.echo(json.dumps({"stage": _stage, "counts": result.counts}))
        sys.exit(result.exit_code)

    return _cmd


for _stage in STAGES:
    _make_stage_command(_stage)


@main.command()
@click.option("--refs", "refs_path", required=True)
@click.option("--instances", "instances_path", required=True)
@click.option("--image-root", default=None)
@click.option("--out", "out_path", required=True)
def ingest(refs_path, instances_path, image_root, out_path):
    """Ingest refCOCO-style annotation files into Expression JSONL."""
    try:
        expressions, report = run_ingest(refs_path, instances_path, image_root)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    write_jsonl(out_path, (e.to_dict() for e in expressions))
    write_manifest(out_path, "ingest", [refs_path, instances_path], 0, "none",
                   {"expressions": report.expressions,
                    "skipped": len(report.skipped)},
                   {"skipped": [list(s) for s in report.skipped]})
    click.echo(json.dumps(report.to_dict()))


@main.command(name="eval")
@click.option("--pred", "pred_path", required=True)
@click.option("--gt", "gt_path", required=True)
@click.option("--report", "report_path", required=True)
@click.option("--metric", type=click.Choice(["ciou", "giou", "ioubox", "all"]),
              default="all")
def eval_cmd(pred_path, gt_path, report_path, metric):
    """Score predictions against a benchmark file."""
    predictions = {str(d["id"]): d for d in read_jsonl(pred_path)}
    records = join_predictions(read_jsonl(gt_path), predictions)
    if not records:
        click.echo("error: no ground-truth records", err=True)
        sys.exit(EXIT_ERROR)
    report = stratified_report(records)
    if metric != "all":
        keep = {"ciou": "ciou", "giou": "giou", "ioubox": "iou_at_box"}[metric]
        for section in ("overall",):
            report[section] = {k: v for k, v in report[section].items()
                               if k in (keep, "count")}
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    click.echo(json.dumps(report["overall"]))


@main.command(name="serve-review")
@click.option("--candidates", "candidates_path", required=True)
@click.option("--images", "image_root", default=None)
@click.option("--addr", default="127.0.0.1:8008")
@click.option("--decisions", "decision_log_path", default="decisions.jsonl")
@click.option("--ui", "ui_dir", default=None)
@click.option("--config", "config_path", default=None)
@click.option("--token", "bearer_token", default=None,
              help="optional static bearer token for /api routes")
def serve_review(candidates_path, image_root, addr, decision_log_path, ui_dir,
                 config_path, bearer_token):
    """Serve the human verification gate over benchmark candidates."""
    import uvicorn

    from .review_service import create_app

    config = load_config(config_path)
    app = create_app(candidates_path, decision_log_path, image_root, ui_dir,
                     exclusion_list=config.exclusion_list,
                     bearer_token=bearer_token)
    host, _, port = addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8008))


if __name__ == "__main__":
    main()

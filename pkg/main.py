# main.py
"""
Command-line entry point.

    aspem ingest | score | select | train | onespace | compose | holdout
          | eval-linkpred | eval-classify | sweep | run

Library errors and invalid configuration exit with code 1 and a message on
stderr; usage errors exit with code 2.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import click
from pydantic import ValidationError

from aspem.core.config import settings
from aspem.core.errors import AspemError
from aspem.models.aspect import aspect_from_name, full_schema_aspect
from aspem.models.embedding import AspectBundle
from aspem.operations.compose import bundle_entry, read_bundle, read_embedding, write_bundle, write_embedding
from aspem.operations.evaluation import classification_harness, linkpred_harness
from aspem.operations.graph import derive_schema, ingest, write_hin
from aspem.operations.holdout import holdout_queries, read_instances, read_labels, write_attributes, write_instances
from aspem.operations.incompatibility import inc_aspect, read_score_table, score_table, write_score_table
from aspem.operations.pipeline import (
    RUN_MANIFEST_NAME,
    linkpred_layout,
    resolve_selection,
    run_pipeline,
    sweep,
    write_report,
    write_run_manifest,
)
from aspem.operations.training import train_aspect
from aspem.schemas.config import PipelineConfig, TrainConfig

logger = logging.getLogger(__name__)


def handle_errors(command):
    """Report library and validation errors on stderr and exit with code 1."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (AspemError, ValidationError) as exc:
            logger.error(f"{command.__name__} failed: {exc}")
            click.echo(f"Error: {exc}", err=True)
            sys.exit(1)
    return wrapper


def manifest_path(out: Path) -> Path:
    return out / RUN_MANIFEST_NAME if out.is_dir() else out.with_name(out.name + ".manifest.json")


def emit(lines: Iterable[str], out: Optional[Path] = None) -> None:
    """Echo result lines and, with ``out``, write them to that file as well."""
    lines = list(lines)
    for line in lines:
        click.echo(line)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def parse_assignments(ctx, param, values: Tuple[str, ...]) -> Dict[str, str]:
    """KEY=VALUE pairs naming PipelineConfig fields; keys are case-insensitive."""
    parsed = {}
    for item in values:
        key, sep, value = item.partition("=")
        key = key.strip().lower()
        if not sep or not key:
            raise click.BadParameter(f"Expected KEY=VALUE, got {item!r}", ctx=ctx, param=param)
        if key not in PipelineConfig.model_fields:
            raise click.BadParameter(f"Unknown config key: {key}", ctx=ctx, param=param)
        parsed[key] = value.strip()
    return parsed


def train_options(command):
    """Shared TrainConfig flags."""
    options = [
        click.option("--dim", "dimension", type=int, default=100, show_default=True, help="Embedding dimension"),
        click.option("--samples", type=str, default="1e6", show_default=True, help="Total sampled edges"),
        click.option("--negatives", type=int, default=5, show_default=True, help="Negative samples per edge"),
        click.option("--lr", "learning_rate", type=float, default=0.025, show_default=True, help="Initial learning rate"),
        click.option("--workers", type=int, default=None, help="Worker threads (default from settings)"),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


format_option = click.option(
    "--format", "fmt", type=click.Choice(["text", "binary"]), default="text", show_default=True,
    help="Embedding file format",
)


def graph_options(command):
    command = click.option("--edges", "edge_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                           required=True, help="Edge file")(command)
    return click.option("--nodes", "node_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                        required=True, help="Node file")(command)


def make_train_config(dimension, samples, negatives, learning_rate, workers, seed) -> TrainConfig:
    return TrainConfig(
        dimension=dimension,
        samples=samples,
        negatives=negatives,
        learning_rate=learning_rate,
        workers=workers if workers is not None else settings.DEFAULT_WORKERS,
        seed=seed,
    )


@click.group()
@click.option("--log-level", default=None, help="Logging level (default from ASPEM_LOG_LEVEL)")
def cli(log_level: Optional[str]) -> None:
    """Aspect-based embedding of heterogeneous information networks."""
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@cli.command("ingest")
@graph_options
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for the normalized node and edge files")
@handle_errors
def ingest_command(node_file: Path, edge_file: Path, out: Optional[Path]) -> None:
    """Validate a graph and print node and edge counts per type."""
    hin = ingest(node_file, edge_file)
    for name, count in hin.type_counts().items():
        click.echo(f"node\t{name}\t{count}")
    for decl in hin.decls:
        click.echo(f"edge\t{decl.name}\t{hin.num_edges(decl.id)}\t{hin.total_weight(decl.id):g}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_hin(hin, out / "nodes.tsv", out / "edges.tsv")
        write_run_manifest(out / RUN_MANIFEST_NAME, "ingest",
                           {"nodes": str(node_file), "edges": str(edge_file)}, 0, 1,
                           [out / "nodes.tsv", out / "edges.tsv"])


@cli.command("score")
@graph_options
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Score table file")
@click.option("--workers", type=int, default=None)
@handle_errors
def score_command(node_file: Path, edge_file: Path, out: Path, workers: Optional[int]) -> None:
    """Compute the incompatibility of every sub-aspect of the schema."""
    workers = workers if workers is not None else settings.DEFAULT_WORKERS
    hin = ingest(node_file, edge_file)
    scores = score_table(hin, derive_schema(hin), workers=workers)
    write_score_table(scores, out)
    click.echo(f"Wrote {len(scores)} sub-aspect scores to {out}")
    write_run_manifest(manifest_path(out), "score", {"nodes": str(node_file), "edges": str(edge_file)},
                       0, workers, [out])


@cli.command("select")
@click.option("--scores", "score_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--anchor", "anchors", multiple=True, help="Anchor node type (repeatable)")
@click.option("--theta", type=float, default=None, help="Incompatibility threshold")
@click.option("--auto-theta", is_flag=True, help="Smallest threshold covering every node type")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also write the selection to this file")
@handle_errors
def select_command(score_file: Path, anchors: Tuple[str, ...], theta: Optional[float], auto_theta: bool,
                   out: Optional[Path]) -> None:
    """Print the threshold and the selected aspects with their scores."""
    if (theta is None) == (not auto_theta):
        raise click.UsageError("Give exactly one of --theta and --auto-theta")
    scores = read_score_table(score_file)
    schema = scores.schema
    theta, aspects = resolve_selection(scores, schema, list(anchors), theta, auto_theta)
    emit([f"theta={theta:g}"] + [f"{a.name}\t{inc_aspect(scores, a):.10g}" for a in aspects], out)
    if out is not None:
        write_run_manifest(manifest_path(out), "select",
                           {"scores": str(score_file), "anchors": list(anchors), "theta": theta,
                            "auto_theta": auto_theta, "aspects": [a.name for a in aspects]},
                           0, 1, [out])


@cli.command("train")
@graph_options
@click.option("--aspect", "aspect_name", required=True, help="Aspect name, e.g. APY")
@train_options
@format_option
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@handle_errors
def train_command(node_file, edge_file, aspect_name, dimension, samples, negatives, learning_rate,
                  workers, seed, fmt, out) -> None:
    """Train the embedding of one aspect."""
    cfg = make_train_config(dimension, samples, negatives, learning_rate, workers, seed)
    hin = ingest(node_file, edge_file)
    aspect = aspect_from_name(derive_schema(hin), aspect_name)
    write_embedding(train_aspect(hin, aspect, cfg), out, fmt)
    click.echo(f"Wrote {aspect.name} embedding to {out}")
    write_run_manifest(manifest_path(out), "train", {"aspect": aspect.name, **cfg.model_dump()},
                       cfg.seed, cfg.workers, [out])


@cli.command("onespace")
@graph_options
@train_options
@format_option
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@handle_errors
def onespace_command(node_file, edge_file, dimension, samples, negatives, learning_rate,
                     workers, seed, fmt, out) -> None:
    """Train a single embedding space over the full schema."""
    cfg = make_train_config(dimension, samples, negatives, learning_rate, workers, seed)
    hin = ingest(node_file, edge_file)
    aspect = full_schema_aspect(derive_schema(hin))
    write_embedding(train_aspect(hin, aspect, cfg), out, fmt)
    click.echo(f"Wrote single-space embedding {aspect.name} to {out}")
    write_run_manifest(manifest_path(out), "onespace", cfg.model_dump(), cfg.seed, cfg.workers, [out])


@cli.command("compose")
@graph_options
@click.option("--embedding", "embeddings", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Embedding file (repeatable, in bundle order)")
@format_option
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True, help="Bundle directory")
@handle_errors
def compose_command(node_file, edge_file, embeddings, fmt, out) -> None:
    """Assemble trained aspect embeddings into a bundle."""
    schema = derive_schema(ingest(node_file, edge_file))
    entries = []
    for path in embeddings:
        table = read_embedding(path)
        entries.append(bundle_entry(schema, aspect_from_name(schema, table.aspect), table))
    manifest = write_bundle(AspectBundle(entries), out, fmt)
    click.echo(f"Wrote bundle manifest {manifest}")
    write_run_manifest(out / RUN_MANIFEST_NAME, "compose",
                       {"nodes": str(node_file), "edges": str(edge_file),
                        "embeddings": [str(p) for p in embeddings], "format": fmt},
                       0, 1, [manifest])


@cli.command("holdout")
@graph_options
@click.option("--query-type", required=True)
@click.option("--target-edge-type", required=True, help="Edge type whose links are predicted")
@click.option("--attribute-edge-type", "attribute_edge_types", multiple=True, required=True)
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--train-queries", type=int, default=1000, show_default=True)
@click.option("--candidates", type=int, default=None, help="Candidate set size (default from settings)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@handle_errors
def holdout_command(node_file, edge_file, query_type, target_edge_type, attribute_edge_types,
                    test_fraction, train_queries, candidates, seed, out) -> None:
    """Build a link-prediction task and the training graph without test queries."""
    hin = ingest(node_file, edge_file)
    task = holdout_queries(hin, query_type, target_edge_type, list(attribute_edge_types),
                           test_fraction, train_queries, candidates, seed)
    out.mkdir(parents=True, exist_ok=True)
    write_hin(task.train_graph, out / "nodes.tsv", out / "edges.tsv")
    write_instances(task.train, out / "train.tsv")
    write_instances(task.test, out / "test.tsv")
    write_attributes(task.train + task.test, out / "attributes.tsv")
    click.echo(f"{len(task.train)} training and {len(task.test)} test queries written to {out}")
    write_run_manifest(out / RUN_MANIFEST_NAME, "holdout",
                       {"nodes": str(node_file), "edges": str(edge_file), "query_type": query_type,
                        "target_edge_type": target_edge_type, "attribute_edge_types": list(attribute_edge_types),
                        "test_fraction": test_fraction, "train_queries": train_queries, "candidates": candidates},
                       seed, 1,
                       [out / name for name in ("nodes.tsv", "edges.tsv", "train.tsv", "test.tsv", "attributes.tsv")])


@cli.command("eval-linkpred")
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--train", "train_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--test", "test_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--attributes", "attribute_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--query-type", required=True)
@click.option("--candidate-type", required=True)
@click.option("--slot", default=None, help="Use only this attribute edge type")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Metrics TSV")
@handle_errors
def eval_linkpred_command(bundle_path, train_file, test_file, attribute_file,
                          query_type, candidate_type, slot, out) -> None:
    """Rank held-out candidates with a logistic model over pair features."""
    bundle = read_bundle(bundle_path)
    train = read_instances(train_file, attribute_file)
    test = read_instances(test_file, attribute_file)
    layout = linkpred_layout(bundle, train + test, query_type, candidate_type)
    if slot is not None:
        layout = layout.restrict(slot)
    report = linkpred_harness(bundle, train, test, layout)
    for row in report.rows():
        click.echo("\t".join(row))
    if out is not None:
        write_report(report, out)
        write_run_manifest(manifest_path(out), "eval-linkpred",
                           {"bundle": str(bundle_path), "train": str(train_file), "test": str(test_file),
                            "attributes": str(attribute_file), "query_type": query_type,
                            "candidate_type": candidate_type, "slot": slot},
                           0, 1, [out])


@cli.command("eval-classify")
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--labels", "label_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also write the result to this file")
@handle_errors
def eval_classify_command(bundle_path, label_file, test_fraction, seed, out) -> None:
    """Classify labelled nodes from their concatenated embeddings."""
    report = classification_harness(read_bundle(bundle_path), read_labels(label_file), test_fraction, seed)
    emit([f"accuracy\t{report.accuracy:.4f}", f"train\t{report.train_size}\ttest\t{report.test_size}"], out)
    if out is not None:
        write_run_manifest(manifest_path(out), "eval-classify",
                           {"bundle": str(bundle_path), "labels": str(label_file), "test_fraction": test_fraction},
                           seed, 1, [out])


@cli.command("sweep")
@graph_options
@click.option("--aspect", "aspect_names", multiple=True, help="Aspect names; the full schema if omitted")
@click.option("--param", "parameter", type=click.Choice(["dimension", "samples"]), required=True)
@click.option("--values", required=True, help="Comma-separated parameter values")
@train_options
@click.option("--train", "train_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--test", "test_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--attributes", "attribute_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--query-type", required=True)
@click.option("--candidate-type", required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also write the table to this file")
@handle_errors
def sweep_command(node_file, edge_file, aspect_names, parameter, values, dimension, samples, negatives,
                  learning_rate, workers, seed, train_file, test_file, attribute_file,
                  query_type, candidate_type, out) -> None:
    """Link-prediction metrics as the dimension or sample count varies."""
    try:
        grid = [int(float(v)) for v in values.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"Not a list of numbers: {values}", param_hint="--values") from None
    hin = ingest(node_file, edge_file)
    schema = derive_schema(hin)
    aspects = [aspect_from_name(schema, n) for n in aspect_names] or [full_schema_aspect(schema)]
    base = make_train_config(dimension, samples, negatives, learning_rate, workers, seed)
    results = sweep(hin, schema, aspects, base, parameter, grid,
                    read_instances(train_file, attribute_file), read_instances(test_file, attribute_file),
                    query_type, candidate_type)
    header, _ = results[0][1].rows()
    emit(["\t".join([parameter] + header)] + ["\t".join([str(value)] + report.rows()[1]) for value, report in results],
         out)
    if out is not None:
        write_run_manifest(manifest_path(out), "sweep",
                           {"nodes": str(node_file), "edges": str(edge_file), "aspects": [a.name for a in aspects],
                            "parameter": parameter, "values": grid, "train": str(train_file),
                            "test": str(test_file), "attributes": str(attribute_file),
                            "query_type": query_type, "candidate_type": candidate_type, **base.model_dump()},
                           base.seed, base.workers, [out])


@cli.command("run")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", "output_dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--theta", type=float, default=None)
@click.option("--samples", type=str, default=None)
@click.option("--dim", "dimension", type=int, default=None)
@click.option("--set", "assignments", multiple=True, callback=parse_assignments, metavar="KEY=VALUE",
              help="Override any config key (repeatable); an empty value removes the key")
@handle_errors
def run_command(config_file, output_dir, seed, workers, theta, samples, dimension, assignments) -> None:
    """Run the whole pipeline from a key=value config file."""
    flags = {
        "output_dir": output_dir, "seed": seed, "workers": workers,
        "theta": theta, "samples": samples, "dimension": dimension,
    }
    overrides = {**assignments, **{k: v for k, v in flags.items() if v is not None}}
    config = PipelineConfig.from_file(config_file, overrides)
    result = run_pipeline(config)
    if result.theta is not None:
        click.echo(f"theta={result.theta:g}")
    click.echo("aspects=" + ",".join(a.name for a in result.aspects))
    if result.report is not None:
        for row in result.report.rows():
            click.echo("\t".join(row))
    click.echo(f"Run manifest: {result.run_manifest}")


if __name__ == "__main__":
    cli()

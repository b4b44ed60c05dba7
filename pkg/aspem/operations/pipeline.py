# aspem/operations/pipeline.py
"""
Pipeline orchestration: the steps behind each CLI subcommand and the full
``run --config`` pipeline built from the same steps, so a chain of
subcommands and one ``run`` produce identical files.

Output layout of a run directory::

    scores.tsv           incompatibility scores (when selection ran)
    bundle/              manifest.json and one embedding file per aspect
    linkpred.tsv         metrics (when link prediction is configured)
    run_manifest.json    config hash, seed and library versions
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from aspem.core.errors import EvaluationError, SelectionError
from aspem.models.aspect import Aspect, ScoreTable, aspect_from_name
from aspem.models.embedding import AspectBundle, EmbeddingTable
from aspem.models.hin import HIN, SchemaGraph
from aspem.operations.compose import build_bundle, write_bundle
from aspem.operations.evaluation import FeatureLayout, LinkPredInstance, linkpred_harness
from aspem.operations.graph import derive_schema, ingest
from aspem.operations.holdout import read_instances
from aspem.operations.incompatibility import read_score_table, score_table, write_score_table
from aspem.operations.selection import choose_threshold, select_aspects
from aspem.operations.training import train_aspect
from aspem.schemas.config import PipelineConfig, TrainConfig
from aspem.schemas.evaluation import LinkPredReport
from aspem.schemas.manifest import RunManifest

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RUN_MANIFEST_NAME = "run_manifest.json"
SWEEP_PARAMETERS = ("dimension", "samples")


@dataclass
class PipelineResult:
    aspects: List[Aspect]
    theta: Optional[float]
    bundle_manifest: Path
    run_manifest: Path
    report: Optional[LinkPredReport] = None
    outputs: List[Path] = field(default_factory=list)


def resolve_selection(
    scores: ScoreTable,
    schema: SchemaGraph,
    anchors: Sequence[str],
    theta: Optional[float],
    auto_theta: bool,
) -> Tuple[float, List[Aspect]]:
    """Threshold (given or chosen) and the aspects it selects."""
    if auto_theta:
        if len(anchors) != 1:
            raise SelectionError("Automatic threshold needs exactly one anchor type")
        theta = choose_threshold(scores, schema, anchors[0])
    if theta is None:
        raise SelectionError("A threshold is required unless it is chosen automatically")
    aspects = select_aspects(scores, schema, theta, anchors)
    if not aspects:
        raise SelectionError(f"No aspect is eligible at threshold {theta:g}")
    return theta, aspects


def train_bundle(hin: HIN, schema: SchemaGraph, aspects: Sequence[Aspect], cfg: TrainConfig) -> AspectBundle:
    """Train every aspect independently, in order."""
    tables: List[EmbeddingTable] = [train_aspect(hin, a, cfg) for a in aspects]
    return build_bundle(schema, aspects, tables)


def linkpred_layout(
    bundle: AspectBundle,
    instances: Sequence[LinkPredInstance],
    query_type: str,
    candidate_type: str,
) -> FeatureLayout:
    """Slots for every attribute edge type seen in ``instances``, sorted by name."""
    edge_types = sorted({k for i in instances for k in i.attributes})
    return FeatureLayout.for_query_type(bundle, candidate_type, query_type, edge_types)


def write_report(report: LinkPredReport, path: PathLike) -> Path:
    path = Path(path)
    header, values = report.rows()
    path.write_text("\t".join(header) + "\n" + "\t".join(values) + "\n", encoding="utf-8")
    return path


def write_run_manifest(
    path: PathLike, command: str, config: Dict[str, Any], seed: int, workers: int, outputs: Sequence[Path]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.create(
        command=command,
        config=config,
        seed=seed,
        workers=workers,
        outputs=[str(p) for p in outputs],
    )
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """ingest -> score -> select -> train -> compose -> (link prediction)."""
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    outputs: List[Path] = []

    hin = ingest(config.node_file, config.edge_file)
    schema = derive_schema(hin)

    theta: Optional[float] = None
    if config.aspects:
        aspects = [aspect_from_name(schema, name) for name in config.aspects]
    else:
        if config.scores is not None:
            scores = read_score_table(config.scores, schema)
        else:
            scores = score_table(hin, schema, workers=config.workers)
        scores_path = output_dir / "scores.tsv"
        write_score_table(scores, scores_path)
        outputs.append(scores_path)
        theta, aspects = resolve_selection(scores, schema, config.anchors, config.theta, config.auto_theta)
    logger.info(f"Training aspects {[a.name for a in aspects]}")

    bundle = train_bundle(hin, schema, aspects, config.train_config())
    bundle_manifest = write_bundle(bundle, output_dir / "bundle", config.embedding_format)
    outputs.append(bundle_manifest)

    report = None
    if config.linkpred_train is not None:
        train = read_instances(config.linkpred_train, config.linkpred_attributes)
        test = read_instances(config.linkpred_test, config.linkpred_attributes)
        layout = linkpred_layout(bundle, train + test, config.query_type, config.candidate_type)
        report = linkpred_harness(bundle, train, test, layout)
        outputs.append(write_report(report, output_dir / "linkpred.tsv"))

    run_manifest = write_run_manifest(
        output_dir / RUN_MANIFEST_NAME, "run", config.model_dump(mode="json"), config.seed, config.workers, outputs
    )
    return PipelineResult(
        aspects=list(aspects),
        theta=theta,
        bundle_manifest=bundle_manifest,
        run_manifest=run_manifest,
        report=report,
        outputs=outputs,
    )


def sweep(
    hin: HIN,
    schema: SchemaGraph,
    aspects: Sequence[Aspect],
    base: TrainConfig,
    parameter: str,
    values: Sequence[int],
    train: Sequence[LinkPredInstance],
    test: Sequence[LinkPredInstance],
    query_type: str,
    candidate_type: str,
) -> List[Tuple[int, LinkPredReport]]:
    """Link-prediction metrics for each value of ``dimension`` or ``samples``."""
    if parameter not in SWEEP_PARAMETERS:
        raise EvaluationError(f"Sweep parameter must be one of {SWEEP_PARAMETERS}, got {parameter}")
    results = []
    for value in values:
        cfg = TrainConfig(**{**base.model_dump(), parameter: value})
        bundle = train_bundle(hin, schema, aspects, cfg)
        layout = linkpred_layout(bundle, list(train) + list(test), query_type, candidate_type)
        report = linkpred_harness(bundle, train, test, layout)
        logger.info(f"sweep {parameter}={value}: P@1={report.precision.get(1, float('nan')):.4f}")
        results.append((value, report))
    return results

# aspem/schemas/__init__.py
"""
Pydantic Schemas Package

Validated configuration and manifest models exchanged between the CLI, the
operations layer and the files a run writes.
"""

from aspem.schemas.config import PipelineConfig, TrainConfig
from aspem.schemas.evaluation import ClassificationReport, LinkPredReport
from aspem.schemas.manifest import AspectEntry, BundleManifest, EdgeTypeEntry, RunManifest

__all__ = [
    "TrainConfig",
    "PipelineConfig",
    "LinkPredReport",
    "ClassificationReport",
    "AspectEntry",
    "BundleManifest",
    "EdgeTypeEntry",
    "RunManifest",
]

# aspem/schemas/manifest.py
"""
Manifest schemas written next to outputs.

The bundle manifest fixes the order in which aspect embeddings are
concatenated and where each table lives; the run manifest records what is
needed to reproduce a run (config hash, seed, library versions).
"""

import hashlib
import json
import platform
from datetime import datetime, timezone
from importlib import metadata
from typing import Any, Dict, List, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class EdgeTypeEntry(BaseModel):
    name: str
    source: str
    target: str


class AspectEntry(BaseModel):
    """One aspect in a bundle manifest."""
    name: str
    node_types: List[str] = Field(..., min_length=1)
    edge_types: List[EdgeTypeEntry] = Field(..., min_length=1)
    dimension: int = Field(..., ge=1)
    path: str = Field(..., description="Embedding file, relative to the manifest")
    format: Literal["text", "binary"] = "text"


class BundleManifest(BaseModel):
    """Ordered aspects of an embedding bundle."""
    aspects: List[AspectEntry]

    @field_validator("aspects")
    @classmethod
    def unique_names(cls, v: List[AspectEntry]) -> List[AspectEntry]:
        names = [a.name for a in v]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate aspect names in manifest: {names}")
        return v

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "aspects": [
                    {"name": "APY", "node_types": ["A", "P", "Y"],
                     "edge_types": [{"name": "write", "source": "A", "target": "P"},
                                    {"name": "year", "source": "P", "target": "Y"}],
                     "dimension": 100, "path": "APY.emb", "format": "text"}
                ]
            }
        }
    )


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def config_hash(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunManifest(BaseModel):
    """What a run did and with which inputs and library versions."""
    command: str
    config: Dict[str, Any]
    config_hash: str
    seed: int
    workers: int
    versions: Dict[str, str]
    outputs: List[str] = Field(default_factory=list)
    created_at: str

    @classmethod
    def create(cls, command: str, config: Dict[str, Any], seed: int, workers: int,
               outputs: List[str]) -> "RunManifest":
        return cls(
            command=command,
            config=json.loads(json.dumps(config, default=str)),
            config_hash=config_hash(config),
            seed=seed,
            workers=workers,
            versions={
                "python": platform.python_version(),
                **{p: _version(p) for p in ("numpy", "scipy", "numba", "scikit-learn", "pydantic", "click")},
            },
            outputs=outputs,
            created_at=datetime.now(timezone.utc).isoformat(),
        )

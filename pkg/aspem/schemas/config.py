# aspem/schemas/config.py
"""
Run configuration schemas.

``TrainConfig`` carries the parameters of one embedding run;
``PipelineConfig`` carries a whole ingest -> score -> select -> train ->
compose -> evaluate pipeline. Both validate on construction, so a config that
reaches the operations layer is already consistent.

A pipeline config file is a flat ``key=value`` text file (read with
python-dotenv); keys are the field names below, case-insensitive.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _integral(value: Any) -> Any:
    """Accept ``1e6`` style sample counts from the command line or config files."""
    if isinstance(value, str):
        text = value.strip()
        try:
            return int(text)
        except ValueError:
            value = float(text)
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"Expected an integer, got {value}")
        return int(value)
    return value


class TrainConfig(BaseModel):
    """
    Parameters of one skip-gram training run.

    Defaults follow common network-embedding practice: 5 negatives, initial
    learning rate 0.025 decayed linearly, noise exponent 3/4.
    """
    dimension: int = Field(100, ge=1, description="Embedding dimension d(a)")
    negatives: int = Field(5, ge=0, description="Negative samples K per edge")
    samples: int = Field(1_000_000, ge=1, description="Total sampled edges S")
    learning_rate: float = Field(0.025, gt=0, description="Initial learning rate")
    workers: int = Field(1, ge=1, description="Worker threads; 1 is bit-reproducible")
    seed: int = Field(0, ge=0, description="Seed for initialization and sampling")
    noise_power: float = Field(0.75, gt=0, description="Exponent of the in-degree noise distribution")

    @field_validator("samples", "dimension", "negatives", "workers", "seed", mode="before")
    @classmethod
    def parse_integral(cls, v):
        return _integral(v)

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"dimension": 100, "negatives": 5, "samples": 1000000000,
                        "learning_rate": 0.025, "workers": 8, "seed": 0}
        },
    )


class PipelineConfig(BaseModel):
    """
    Full pipeline configuration.

    Either ``theta`` or ``auto_theta`` must be given unless ``aspects`` lists
    the aspects to train explicitly.
    """
    node_file: Path
    edge_file: Path
    output_dir: Path
    scores: Optional[Path] = Field(None, description="Precomputed score table; computed from the graph if absent")
    anchors: List[str] = Field(default_factory=list)
    theta: Optional[float] = Field(None, ge=0)
    auto_theta: bool = False
    aspects: List[str] = Field(default_factory=list, description="Explicit aspect names, bypassing selection")

    dimension: int = Field(100, ge=1)
    negatives: int = Field(5, ge=0)
    samples: int = Field(1_000_000, ge=1)
    learning_rate: float = Field(0.025, gt=0)
    workers: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    noise_power: float = Field(0.75, gt=0)
    embedding_format: Literal["text", "binary"] = "text"

    linkpred_train: Optional[Path] = None
    linkpred_test: Optional[Path] = None
    linkpred_attributes: Optional[Path] = None
    query_type: Optional[str] = None
    candidate_type: Optional[str] = None

    @field_validator("anchors", "aspects", mode="before")
    @classmethod
    def split_list(cls, v):
        if isinstance(v, str):
            return [part.strip() for part in v.split(",") if part.strip()]
        return v

    @field_validator("samples", "dimension", "negatives", "workers", "seed", mode="before")
    @classmethod
    def parse_integral(cls, v):
        return _integral(v)

    @field_validator("auto_theta", mode="before")
    @classmethod
    def parse_flag(cls, v):
        if isinstance(v, str):
            return v.strip().lower() in ("1", "true", "yes", "on")
        return v

    @model_validator(mode="after")
    def validate_selection(self) -> "PipelineConfig":
        if not self.aspects:
            if self.theta is None and not self.auto_theta:
                raise ValueError("Either theta, auto_theta or an explicit aspects list is required")
            if self.theta is not None and self.auto_theta:
                raise ValueError("theta and auto_theta are mutually exclusive")
            if self.auto_theta and len(self.anchors) != 1:
                raise ValueError("auto_theta needs exactly one anchor type")
        linkpred = (self.linkpred_train, self.linkpred_test, self.linkpred_attributes,
                    self.query_type, self.candidate_type)
        if any(x is not None for x in linkpred) and not all(x is not None for x in linkpred):
            raise ValueError(
                "Link prediction needs linkpred_train, linkpred_test, linkpred_attributes, "
                "query_type and candidate_type together"
            )
        return self

    @model_validator(mode="after")
    def validate_paths(self) -> "PipelineConfig":
        for name in ("node_file", "edge_file", "scores", "linkpred_train", "linkpred_test", "linkpred_attributes"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{name} does not exist: {path}")
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            dimension=self.dimension,
            negatives=self.negatives,
            samples=self.samples,
            learning_rate=self.learning_rate,
            workers=self.workers,
            seed=self.seed,
            noise_power=self.noise_power,
        )

    @classmethod
    def from_file(cls, path: Path, overrides: Optional[Mapping[str, Any]] = None) -> "PipelineConfig":
        """
        Load a flat key-value config file; ``overrides`` (e.g. CLI flags that
        were given) take precedence. An override of None is ignored and an
        empty string removes the key. Relative paths in the file resolve
        against the config file's directory.
        """
        raw: Dict[str, Any] = {
            key.strip().lower(): value
            for key, value in dotenv_values(path).items()
            if value is not None
        }
        base = Path(path).parent
        for name in ("node_file", "edge_file", "output_dir", "scores",
                     "linkpred_train", "linkpred_test", "linkpred_attributes"):
            if name in raw and not Path(raw[name]).is_absolute():
                raw[name] = str(base / raw[name])
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if value == "":
                raw.pop(key, None)
            else:
                raw[key] = value
        return cls(**raw)

    model_config = ConfigDict(extra="forbid")

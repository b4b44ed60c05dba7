# aspem/schemas/evaluation.py
"""Evaluation result schemas."""

from typing import Dict, List

from pydantic import BaseModel, Field


class LinkPredReport(BaseModel):
    """Precision/recall at k, averaged over test queries."""
    precision: Dict[int, float]
    recall: Dict[int, float]
    queries: int = Field(..., ge=0)

    def rows(self) -> List[List[str]]:
        ks = sorted(self.precision)
        return [[f"P@{k}" for k in ks] + [f"R@{k}" for k in ks],
                [f"{self.precision[k]:.4f}" for k in ks] + [f"{self.recall[k]:.4f}" for k in ks]]


class ClassificationReport(BaseModel):
    accuracy: float = Field(..., ge=0, le=1)
    train_size: int
    test_size: int
    classes: List[str]

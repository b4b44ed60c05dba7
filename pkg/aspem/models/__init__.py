# aspem/models/__init__.py
"""
Domain Models Package

The graph, schema, aspect and embedding types every operation works on.
"""

from aspem.models.aspect import Aspect, ScoreTable, SubAspect, aspect_from_name, full_schema_aspect
from aspem.models.embedding import AspectBundle, BundleEntry, EdgeSpec, EmbeddingTable
from aspem.models.hin import HIN, EdgeTypeDecl, SchemaGraph, TypeRegistry

__all__ = [
    "HIN",
    "EdgeTypeDecl",
    "SchemaGraph",
    "TypeRegistry",
    "Aspect",
    "SubAspect",
    "ScoreTable",
    "aspect_from_name",
    "full_schema_aspect",
    "AspectBundle",
    "BundleEntry",
    "EdgeSpec",
    "EmbeddingTable",
]

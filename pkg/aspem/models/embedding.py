# aspem/models/embedding.py
"""
Embedding tables and aspect bundles.

An ``EmbeddingTable`` maps every node of an aspect's node types to one vector
of the aspect's dimension. An ``AspectBundle`` is the ordered list of
(aspect, table) pairs whose vectors are concatenated into final features; its
order is fixed when the aspects are selected and is persisted in the bundle
manifest.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from aspem.core.errors import BundleError


class EmbeddingTable:
    """
    Per-aspect map from external node id to a vector.

    Attributes:
        aspect: aspect name
        node_ids: ids in row order
        vectors: (len(node_ids), dimension) float64 matrix
    """

    def __init__(self, aspect: str, node_ids: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise BundleError(f"Embedding matrix for {aspect} must be two-dimensional")
        if vectors.shape[0] != len(node_ids):
            raise BundleError(
                f"Embedding table {aspect}: {len(node_ids)} ids but {vectors.shape[0]} rows"
            )
        if vectors.shape[1] < 1:
            raise BundleError(f"Embedding table {aspect} must have dimension >= 1")
        self.aspect = aspect
        self.node_ids: Tuple[str, ...] = tuple(node_ids)
        self.vectors = vectors
        self._row: Dict[str, int] = {}
        for i, node_id in enumerate(self.node_ids):
            if node_id in self._row:
                raise BundleError(f"Duplicate node row '{node_id}' in table {aspect}")
            self._row[node_id] = i

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.node_ids)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._row

    def row(self, node_id: str) -> int:
        try:
            return self._row[node_id]
        except KeyError:
            raise BundleError(f"Node '{node_id}' is not in embedding table {self.aspect}") from None

    def vector(self, node_id: str) -> np.ndarray:
        return self.vectors[self.row(node_id)]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.vectors)))

    def freeze(self) -> "EmbeddingTable":
        self.vectors.setflags(write=False)
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.aspect == other.aspect
            and self.node_ids == other.node_ids
            and np.array_equal(self.vectors, other.vectors)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"<EmbeddingTable({self.aspect}, nodes={len(self)}, d={self.dimension})>"


@dataclass(frozen=True)
class EdgeSpec:
    """Edge type of a bundled aspect, by name."""
    name: str
    source: str
    target: str


@dataclass(frozen=True)
class BundleEntry:
    """One aspect of a bundle with the schema facts needed downstream."""
    name: str
    node_types: Tuple[str, ...]
    edge_types: Tuple[EdgeSpec, ...]
    table: EmbeddingTable

    @property
    def dimension(self) -> int:
        return self.table.dimension


@dataclass
class AspectBundle:
    """Ordered aspects with their embedding tables."""
    entries: List[BundleEntry] = field(default_factory=list)

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise BundleError(f"Aspect names in a bundle must be unique: {names}")

    def __iter__(self) -> Iterator[BundleEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    def entry(self, name: str) -> BundleEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise BundleError(f"Aspect '{name}' is not in the bundle")

    def aspects_with_types(self, *node_types: str) -> List[BundleEntry]:
        """Entries whose node-type set contains every given type name."""
        return [e for e in self.entries if all(t in e.node_types for t in node_types)]

    def edge_endpoints(self, edge_type: str) -> Optional[Tuple[str, str]]:
        """(source type, target type) of an edge type known to any aspect."""
        for e in self.entries:
            for spec in e.edge_types:
                if spec.name == edge_type:
                    return spec.source, spec.target
        return None

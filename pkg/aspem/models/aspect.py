# aspem/models/aspect.py
"""
Aspects and Sub-Aspects

An aspect is a connected subgraph of the network schema: a set of edge types
plus the node types they touch. A sub-aspect is the smallest unit on which
incompatibility is measured: two edge types joined at a shared center node
type, written left -[left edge]-> center -[right edge]-> right.

Scores are always stored against the canonical form of a sub-aspect, so a
sub-aspect and its mirror image share one entry.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Tuple

from aspem.core.errors import GraphError, SelectionError
from aspem.models.hin import SchemaGraph


@dataclass(frozen=True, order=True)
class SubAspect:
    """
    Two edge types joined at a center node type.

    Fields are type ids: (left node type, left edge type, center node type,
    right edge type, right node type).
    """
    left: int
    left_edge: int
    center: int
    right_edge: int
    right: int

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return (self.left, self.left_edge, self.center, self.right_edge, self.right)

    def mirror(self) -> "SubAspect":
        return SubAspect(self.right, self.right_edge, self.center, self.left_edge, self.left)

    def canonical(self) -> "SubAspect":
        """The lexicographically smaller of this sub-aspect and its mirror."""
        mirrored = self.mirror()
        return self if self.as_tuple() <= mirrored.as_tuple() else mirrored

    @property
    def edge_types(self) -> frozenset:
        return frozenset((self.left_edge, self.right_edge))

    def label(self, schema: SchemaGraph) -> str:
        """Human readable form such as ``A-P-Y``."""
        names = schema.node_types
        return "-".join(
            names.name_of(t) for t in (self.left, self.center, self.right)
        )


def aspect_name(schema: SchemaGraph, node_types: Iterable[int]) -> str:
    """
    Name an aspect after its node types in schema order: ``APRTV``.

    Single-letter type names are concatenated; longer names are joined with
    dashes so the name stays unambiguous.
    """
    names = [schema.node_types.name_of(t) for t in sorted(node_types)]
    if all(len(n) == 1 for n in names):
        return "".join(names)
    return "-".join(names)


@dataclass(frozen=True)
class Aspect:
    """
    A connected, nonempty subgraph of the schema.

    Build instances with ``Aspect.from_edge_types`` so the invariants are
    checked; the raw constructor trusts its arguments.
    """
    edge_types: frozenset
    node_types: frozenset
    name: str

    @classmethod
    def from_edge_types(cls, schema: SchemaGraph, edge_types: Iterable[int]) -> "Aspect":
        edge_set = frozenset(edge_types)
        if not edge_set:
            raise SelectionError("An aspect needs at least one edge type")
        decls = [schema.decl(r) for r in sorted(edge_set)]
        node_set = frozenset(t for d in decls for t in d.endpoints())
        if not is_connected(node_set, decls):
            raise SelectionError(
                "Aspect edge types do not form a connected subgraph: "
                + ", ".join(d.name for d in decls)
            )
        return cls(edge_set, node_set, aspect_name(schema, node_set))

    def issubset(self, other: "Aspect") -> bool:
        return self.edge_types <= other.edge_types

    def is_proper_subset(self, other: "Aspect") -> bool:
        return self.edge_types < other.edge_types

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (len(self.edge_types), tuple(sorted(self.edge_types)))

    def edge_names(self, schema: SchemaGraph) -> Tuple[str, ...]:
        return tuple(schema.edge_types.name_of(r) for r in sorted(self.edge_types))

    def __repr__(self):
        return f"<Aspect({self.name}, edge_types={sorted(self.edge_types)})>"


def is_connected(node_types: frozenset, decls) -> bool:
    parent = {t: t for t in node_types}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for d in decls:
        a, b = find(d.source), find(d.target)
        if a != b:
            parent[a] = b
    return len({find(t) for t in node_types}) == 1


def aspect_from_name(schema: SchemaGraph, name: str) -> Aspect:
    """
    Resolve an aspect name such as ``APRTV`` (or ``user-movie`` for long type
    names) to the subgraph of the schema induced by those node types.
    """
    registry = schema.node_types
    if all(len(n) == 1 for n in registry.names) and "-" not in name:
        parts = list(name)
    else:
        parts = [p for p in name.split("-") if p]
    try:
        wanted = frozenset(schema.node_type_id(p) for p in parts)
    except GraphError as exc:
        raise SelectionError(f"Cannot resolve aspect '{name}': {exc}") from None
    induced = [d.id for d in schema.decls if d.source in wanted and d.target in wanted]
    aspect = Aspect.from_edge_types(schema, induced)
    if aspect.node_types != wanted:
        missing = sorted(registry.name_of(t) for t in wanted - aspect.node_types)
        raise SelectionError(
            f"Aspect '{name}' leaves node types without edges: {', '.join(missing)}"
        )
    return aspect


def full_schema_aspect(schema: SchemaGraph) -> Aspect:
    """The aspect covering the whole schema (the single space of OneSpace)."""
    return Aspect.from_edge_types(schema, schema.edge_type_ids)


class ScoreTable:
    """
    Incompatibility score per canonical sub-aspect.

    Keys are canonicalized on the way in and on lookup, so callers may use
    either orientation of a sub-aspect.
    """

    def __init__(self, schema: SchemaGraph, scores: Optional[Dict[SubAspect, float]] = None):
        self.schema = schema
        self._scores: Dict[SubAspect, float] = {}
        for key, value in (scores or {}).items():
            self[key] = value

    def __setitem__(self, key: SubAspect, value: float) -> None:
        value = float(value)
        if not value >= 0:
            raise SelectionError(
                f"Incompatibility scores must be nonnegative, got {value} "
                f"for {key.label(self.schema)}"
            )
        self._scores[key.canonical()] = value

    def __getitem__(self, key: SubAspect) -> float:
        try:
            return self._scores[key.canonical()]
        except KeyError:
            raise SelectionError(
                f"Missing incompatibility score for sub-aspect {key.label(self.schema)}"
            ) from None

    def __contains__(self, key: object) -> bool:
        return isinstance(key, SubAspect) and key.canonical() in self._scores

    def __len__(self) -> int:
        return len(self._scores)

    def __iter__(self) -> Iterator[SubAspect]:
        return iter(sorted(self._scores))

    def items(self):
        return [(k, self._scores[k]) for k in sorted(self._scores)]

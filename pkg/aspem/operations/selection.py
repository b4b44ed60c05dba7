# aspem/operations/selection.py
"""
Threshold-based aspect selection.

Rules, for a threshold theta >= 0:
  (i) an aspect whose incompatibility exceeds theta is not eligible
      (the comparison is inclusive: inc == theta is eligible);
 (ii) an eligible aspect strictly contained in another eligible aspect is
      not selected.
Only connected subgraphs of the schema containing every anchor node type are
considered.
"""

import logging
from typing import Iterable, List, Optional, Set, Tuple, Union

from aspem.core.config import settings
from aspem.core.errors import SelectionError
from aspem.models.aspect import Aspect, ScoreTable, is_connected
from aspem.models.hin import SchemaGraph
from aspem.operations.incompatibility import inc_aspect

logger = logging.getLogger(__name__)

TypeRef = Union[int, str]


def _resolve_types(schema: SchemaGraph, types: Iterable[TypeRef]) -> Optional[Set[int]]:
    """Type ids for names/ids; None if any of them is not in the schema."""
    resolved = set()
    for t in types:
        if isinstance(t, str):
            if t not in schema.node_types:
                return None
            t = schema.node_types.id_of(t)
        if t not in schema.node_type_ids:
            return None
        resolved.add(t)
    return resolved


def enumerate_candidate_aspects(
    schema: SchemaGraph,
    anchors: Iterable[TypeRef] = (),
    limit: Optional[int] = None,
) -> List[Aspect]:
    """
    Every connected edge-type subset of the schema whose node types include all
    anchors, ordered by size then by edge type ids.

    Raises:
        SelectionError: if the schema has more edge types than ``limit``
            (default ``settings.CANDIDATE_EDGE_TYPE_LIMIT``)
    """
    limit = settings.CANDIDATE_EDGE_TYPE_LIMIT if limit is None else limit
    decls = schema.decls
    if len(decls) > limit:
        raise SelectionError(
            f"Schema has {len(decls)} edge types; candidate enumeration is limited to {limit}"
        )
    anchor_ids = _resolve_types(schema, anchors)
    if anchor_ids is None:
        return []

    candidates = []
    for mask in range(1, 1 << len(decls)):
        chosen = [d for i, d in enumerate(decls) if mask >> i & 1]
        nodes = frozenset(t for d in chosen for t in d.endpoints())
        if not anchor_ids <= nodes or not is_connected(nodes, chosen):
            continue
        candidates.append(Aspect.from_edge_types(schema, (d.id for d in chosen)))
    candidates.sort(key=Aspect.sort_key)
    return candidates


def selection_key(a: Aspect) -> Tuple[int, Tuple[int, ...]]:
    """Bundle order: more edge types first, ties by sorted edge type ids."""
    return (-len(a.edge_types), tuple(sorted(a.edge_types)))


def select_aspects(
    scores: ScoreTable,
    schema: SchemaGraph,
    theta: float,
    anchors: Iterable[TypeRef] = (),
) -> List[Aspect]:
    """
    Representative aspects under threshold ``theta``.

    Returns the eligible candidates not strictly contained in another eligible
    candidate, largest aspect first and then by edge type ids. This order is
    the order of the blocks in a composed bundle.

    Example:
    >>> [a.name for a in select_aspects(imdb_scores, imdb_schema, 1927.68, ["U"])]
    ['UMA', 'UMD', 'UMG']
    """
    if not theta >= 0:
        raise SelectionError(f"Threshold must be nonnegative, got {theta}")
    candidates = enumerate_candidate_aspects(schema, anchors)
    eligible = [a for a in candidates if inc_aspect(scores, a) <= theta]
    selected = [a for a in eligible if not any(a.is_proper_subset(b) for b in eligible)]
    selected.sort(key=selection_key)
    logger.info(
        f"theta={theta:g}: {len(eligible)} of {len(candidates)} candidates eligible, "
        f"selected {[a.name for a in selected]}"
    )
    return selected


def covered_types(scores: ScoreTable, schema: SchemaGraph, theta: float, anchor: TypeRef) -> frozenset:
    """Node types co-occurring with ``anchor`` in some eligible aspect."""
    covered = set()
    for a in enumerate_candidate_aspects(schema, [anchor]):
        if inc_aspect(scores, a) <= theta:
            covered |= a.node_types
    return frozenset(covered)


def choose_threshold(scores: ScoreTable, schema: SchemaGraph, anchor: TypeRef) -> float:
    """
    Smallest theta, among the incompatibility values of the anchored candidates,
    at which every schema node type appears with the anchor in an eligible aspect.

    Raises:
        SelectionError: if the anchor is not in the schema or some node types
            are unreachable from it
    """
    resolved = _resolve_types(schema, [anchor])
    if resolved is None:
        raise SelectionError(f"Anchor type {anchor} is not in the schema")
    anchor_id = resolved.pop()
    unreachable = schema.node_type_ids - schema.reachable_from(anchor_id)
    if unreachable:
        names = sorted(schema.node_types.name_of(t) for t in unreachable)
        raise SelectionError(
            f"Node types unreachable from anchor {schema.node_types.name_of(anchor_id)}: {', '.join(names)}"
        )
    if schema.node_type_ids == {anchor_id}:
        return 0.0

    candidates = enumerate_candidate_aspects(schema, [anchor_id])
    scored = [(inc_aspect(scores, a), a) for a in candidates]
    for theta in sorted({value for value, _ in scored}):
        covered = set()
        for value, a in scored:
            if value <= theta:
                covered |= a.node_types
        if covered == schema.node_type_ids:
            logger.info(f"Smallest covering threshold for anchor {schema.node_types.name_of(anchor_id)}: {theta:g}")
            return theta
    raise SelectionError("No threshold covers every node type")  # unreachable for a connected schema

# aspem/operations/incompatibility.py
"""
Incompatibility statistic.

For a sub-aspect left -[psi_l]-> center -[psi_r]-> right and a center node u,
gamma(u) compares what u "sees" through the two edge types::

    x(u, w) = <P_r[u], P_r[w]>        P_r: row-normalized center->right adjacency
    y(u, w) = <P_l[u], P_l[w]>        P_l: row-normalized center->left adjacency
    gamma(u) = sum_w max(x, y) / sum_w min(x, y) - 1

summed over all centers w. The incompatibility of the sub-aspect is the mean
of gamma over the centers with a nonzero denominator; the incompatibility of
an aspect is the sum over its sub-aspects.

Only centers sharing a neighbour with u contribute to either sum, so both are
computed from sparse products. The max-sum never needs the product at all:
sum_w max(x, y) = sum_w x + sum_w y - sum_w min(x, y), and
sum_w x(u, w) = P_r[u] . (column sums of P_r).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from aspem.core.config import settings
from aspem.core.errors import GraphError, ParseError, SelectionError
from aspem.models.aspect import Aspect, ScoreTable, SubAspect
from aspem.models.hin import HIN, EdgeTypeDecl, SchemaGraph, TypeRegistry
from aspem.operations.graph import derive_schema, parse_edgetype_header

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def _points_into(decl: EdgeTypeDecl, center: int) -> bool:
    return decl.directed and decl.target == center and decl.source != center


def sub_aspects_of_edge_types(schema: SchemaGraph, edge_types: Iterable[int]) -> List[SubAspect]:
    """Canonical sub-aspects formed by pairs of the given edge types."""
    decls = [schema.decl(r) for r in sorted(set(edge_types))]
    found = set()
    for first, second in combinations(decls, 2):
        shared = set(first.endpoints()) & set(second.endpoints())
        for center in sorted(shared):
            # an edge pointing into the center takes the left slot
            if _points_into(second, center) and not _points_into(first, center):
                left, right = second, first
            else:
                left, right = first, second
            found.add(
                SubAspect(
                    left=left.other_end(center),
                    left_edge=left.id,
                    center=center,
                    right_edge=right.id,
                    right=right.other_end(center),
                ).canonical()
            )
    return sorted(found)


def enumerate_sub_aspects(a: Aspect, schema: SchemaGraph) -> List[SubAspect]:
    """
    All sub-aspects inside aspect ``a``: every pair of distinct edge types of
    the aspect that share a center node type, mirrors collapsed.

    Example:
    >>> len(enumerate_sub_aspects(full_schema_aspect(dblp_schema), dblp_schema))
    10
    """
    return sub_aspects_of_edge_types(schema, a.edge_types)


# ---------------------------------------------------------------------------
# Per-node statistic
# ---------------------------------------------------------------------------

def _row_normalize(matrix: sparse.csr_matrix) -> sparse.csr_matrix:
    # a zero row stays a zero row
    row_sums = np.asarray(matrix.sum(axis=1)).ravel()
    inverse = np.zeros_like(row_sums)
    np.divide(1.0, row_sums, out=inverse, where=row_sums > 0)
    return sparse.csr_matrix(sparse.diags(inverse) @ matrix)


def center_rows(hin: HIN, decl: EdgeTypeDecl, center: int, slot: str) -> sparse.csr_matrix:
    """
    Adjacency rows of the center nodes along one side of a sub-aspect, oriented
    from the center outward (the reverse orientation for an edge type pointing
    into the center).

    Args:
        slot: ``"left"`` or ``"right"``; only matters for a directed edge type
            whose two endpoints are both the center type
    """
    other = decl.other_end(center)
    if not decl.directed:
        return hin.typed_block(decl.id, center, other)
    if decl.source == center and decl.target == center:
        if slot == "left":
            return hin.typed_block(decl.id, center, center).T.tocsr()
        return hin.typed_block(decl.id, center, center)
    if decl.source == center:
        return hin.typed_block(decl.id, center, other)
    return hin.typed_block(decl.id, other, center).T.tocsr()


def _normalized_sides(hin: HIN, s: SubAspect) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    left = center_rows(hin, hin.decl(s.left_edge), s.center, "left")
    right = center_rows(hin, hin.decl(s.right_edge), s.center, "right")
    return _row_normalize(left), _row_normalize(right)


def _gamma_block(
    left: sparse.csr_matrix,
    right: sparse.csr_matrix,
    left_colsum: np.ndarray,
    right_colsum: np.ndarray,
    rows: np.ndarray,
) -> np.ndarray:
    left_rows = left[rows]
    right_rows = right[rows]
    x = right_rows @ right.T
    y = left_rows @ left.T
    denominator = np.asarray(x.minimum(y).sum(axis=1)).ravel()
    numerator = right_rows @ right_colsum + left_rows @ left_colsum - denominator
    values = np.full(len(rows), np.nan)
    valid = denominator > 0
    values[valid] = numerator[valid] / denominator[valid] - 1.0
    return values


def gamma_values(
    hin: HIN,
    s: SubAspect,
    workers: int = 1,
    chunk_size: Optional[int] = None,
) -> np.ndarray:
    """
    gamma(u) for every node of the center type, in local order; NaN marks an
    excluded node (zero denominator).

    Blocks of center rows are evaluated on a thread pool and reassembled in
    block order, so the result does not depend on ``workers``.
    """
    chunk_size = chunk_size or settings.SCORE_CHUNK_SIZE
    left, right = _normalized_sides(hin, s)
    left_colsum = np.asarray(left.sum(axis=0)).ravel()
    right_colsum = np.asarray(right.sum(axis=0)).ravel()
    n = left.shape[0]
    blocks = [np.arange(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda rows: _gamma_block(left, right, left_colsum, right_colsum, rows),
                blocks,
            ))
    else:
        parts = [_gamma_block(left, right, left_colsum, right_colsum, rows) for rows in blocks]
    return np.concatenate(parts) if parts else np.zeros(0)


def gamma(hin: HIN, u: Union[str, int], s: SubAspect) -> Optional[float]:
    """
    gamma(u) for one center node.

    Returns:
        the statistic, or None when u is excluded (its denominator is zero,
        e.g. u has no edges of one of the two types)

    Raises:
        GraphError: if u is not of the sub-aspect's center type
    """
    index = hin.node_index(u) if isinstance(u, str) else u
    if hin.type_of(index) != s.center:
        raise GraphError(
            f"Node {hin.node_ids[index]} has type {hin.node_types.name_of(hin.type_of(index))}, "
            f"expected center type {hin.node_types.name_of(s.center)}"
        )
    left, right = _normalized_sides(hin, s)
    value = _gamma_block(
        left,
        right,
        np.asarray(left.sum(axis=0)).ravel(),
        np.asarray(right.sum(axis=0)).ravel(),
        np.array([hin.local_index(index)]),
    )[0]
    return None if np.isnan(value) else float(value)


def inc_simple(
    hin: HIN,
    s: SubAspect,
    workers: int = 1,
    chunk_size: Optional[int] = None,
) -> float:
    """
    Incompatibility of one sub-aspect: mean of gamma over non-excluded centers.

    Returns 0 (and logs a warning) when every center is excluded.
    """
    values = gamma_values(hin, s, workers=workers, chunk_size=chunk_size)
    kept = values[~np.isnan(values)]
    if kept.size == 0:
        logger.warning(
            f"No center node of type {hin.node_types.name_of(s.center)} has edges of both "
            f"{hin.edge_types.name_of(s.left_edge)} and {hin.edge_types.name_of(s.right_edge)}; "
            "incompatibility set to 0"
        )
        return 0.0
    return math.fsum(kept) / kept.size


def inc_aspect(scores: ScoreTable, a: Aspect) -> float:
    """
    Incompatibility of an aspect: sum of its sub-aspect scores.

    Raises:
        SelectionError: if a sub-aspect of ``a`` has no score
    """
    return math.fsum(scores[s] for s in enumerate_sub_aspects(a, scores.schema))


def score_table(hin: HIN, schema: Optional[SchemaGraph] = None, workers: int = 1) -> ScoreTable:
    """Score every sub-aspect of the schema (derived from ``hin`` if omitted)."""
    schema = schema or derive_schema(hin)
    table = ScoreTable(schema)
    subs = sub_aspects_of_edge_types(schema, schema.edge_type_ids)
    for s in subs:
        table[s] = inc_simple(hin, s, workers=workers)
        logger.info(f"Inc({s.label(schema)}) [{hin.edge_types.name_of(s.left_edge)}, "
                    f"{hin.edge_types.name_of(s.right_edge)}] = {table[s]:.6g}")
    return table


# ---------------------------------------------------------------------------
# Score table files
# ---------------------------------------------------------------------------

def write_score_table(scores: ScoreTable, path: Union[str, Path]) -> None:
    """Write ``%edgetype`` headers followed by one ``%subaspect`` line per score."""
    schema = scores.schema
    nt, et = schema.node_types, schema.edge_types
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for line in schema.describe():
            handle.write(line + "\n")
        for s, value in scores.items():
            handle.write(
                f"%subaspect {nt.name_of(s.left)} {et.name_of(s.left_edge)} {nt.name_of(s.center)} "
                f"{et.name_of(s.right_edge)} {nt.name_of(s.right)} {value!r}\n"
            )


def read_score_table(path: Union[str, Path], schema: Optional[SchemaGraph] = None) -> ScoreTable:
    """
    Load a score table.

    The schema is taken from ``schema`` if given, else from the file's
    ``%edgetype`` headers, else inferred from the ``%subaspect`` rows with
    every edge type undirected.

    Raises:
        ParseError: malformed lines, unknown names, inconsistent endpoints,
            negative scores
    """
    path = Path(path)
    headers: List[Tuple[int, Tuple[str, str, str, bool]]] = []
    rows: List[Tuple[int, List[str], float]] = []
    try:
        handle = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise ParseError("File not found", path=path) from None
    with handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("%edgetype"):
                headers.append((number, parse_edgetype_header(line, path, number)))
                continue
            if not line.startswith("%subaspect"):
                raise ParseError("Expected a %edgetype or %subaspect line", path=path, line=number)
            parts = line.split()
            if len(parts) != 7:
                raise ParseError(
                    "Expected '%subaspect <left> <left_edge> <center> <right_edge> <right> <score>'",
                    path=path, line=number,
                )
            try:
                value = float(parts[6])
            except ValueError:
                raise ParseError(f"Score is not a number: '{parts[6]}'", path=path, line=number, field="score") from None
            if not (math.isfinite(value) and value >= 0):
                raise ParseError(f"Score must be finite and nonnegative, got {parts[6]}", path=path, line=number, field="score")
            rows.append((number, parts[1:6], value))

    if schema is None:
        schema = _schema_from_headers(path, headers) if headers else _schema_from_rows(path, rows)

    table = ScoreTable(schema)
    for number, (left, left_edge, center, right_edge, right), value in rows:
        try:
            l, c, r = (schema.node_type_id(n) for n in (left, center, right))
            le, re = schema.decl_by_name(left_edge), schema.decl_by_name(right_edge)
        except GraphError as exc:
            raise ParseError(str(exc), path=path, line=number) from None
        if not (le.touches(c) and le.other_end(c) == l and re.touches(c) and re.other_end(c) == r):
            raise ParseError(
                f"Sub-aspect {left}-{center}-{right} does not match the endpoints of {left_edge}/{right_edge}",
                path=path, line=number,
            )
        if le.id == re.id:
            raise ParseError("A sub-aspect needs two distinct edge types", path=path, line=number)
        table[SubAspect(l, le.id, c, re.id, r)] = value
    return table


def _schema_from_headers(path: Path, headers) -> SchemaGraph:
    node_names: List[str] = []
    for _, (_, source, target, _) in headers:
        for name in (source, target):
            if name not in node_names:
                node_names.append(name)
    node_types = TypeRegistry(node_names)
    decls = []
    for number, (name, source, target, directed) in headers:
        if any(d.name == name for d in decls):
            raise ParseError(f"Edge type declared twice: {name}", path=path, line=number, field="name")
        decls.append(EdgeTypeDecl(len(decls), name, node_types.id_of(source), node_types.id_of(target), directed))
    return SchemaGraph(
        node_types,
        TypeRegistry([d.name for d in decls]),
        frozenset(range(len(node_names))),
        tuple(decls),
    )


def _schema_from_rows(path: Path, rows) -> SchemaGraph:
    node_names: List[str] = []
    endpoints: Dict[str, Tuple[str, str]] = {}
    for number, (left, left_edge, center, right_edge, right), _ in rows:
        for name in (left, center, right):
            if name not in node_names:
                node_names.append(name)
        for edge, pair in ((left_edge, (left, center)), (right_edge, (center, right))):
            known = endpoints.get(edge)
            if known is None:
                endpoints[edge] = pair
            elif set(known) != set(pair):
                raise ParseError(
                    f"Edge type {edge} used with endpoints {pair} and {known}",
                    path=path, line=number,
                )
    node_types = TypeRegistry(node_names)
    decls = tuple(
        EdgeTypeDecl(i, name, node_types.id_of(pair[0]), node_types.id_of(pair[1]), False)
        for i, (name, pair) in enumerate(endpoints.items())
    )
    return SchemaGraph(
        node_types,
        TypeRegistry(list(endpoints)),
        frozenset(range(len(node_names))),
        decls,
    )

# aspem/operations/graph.py
"""
Graph ingestion and schema derivation.

File formats (UTF-8, ``#`` comment lines and blank lines ignored):

Node file::

    <node_id>\\t<node_type_name>

Edge file::

    %edgetype <name> <src_type> <dst_type> <d|u>
    <src_id>\\t<dst_id>\\t<edge_type_name>\\t<weight>

Directedness is a property of the edge type. Undirected records are
decomposed into two directed edges; duplicate (src, dst) pairs within one
edge type are merged by summing their weights.
"""

import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from aspem.core.errors import GraphError, ParseError
from aspem.models.hin import HIN, EdgeTypeDecl, SchemaGraph, TypeRegistry

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class Edge(NamedTuple):
    """One edge record with the directedness of its type attached."""
    source: str
    target: str
    edge_type: str
    weight: float
    directed: bool


def decompose_undirected(edge: Edge) -> List[Edge]:
    """
    Split an undirected edge into two directed edges of equal weight.

    Self-loops are kept and yield two identical directed loops.

    Raises:
        GraphError: if the edge is already directed
    """
    if edge.directed:
        raise GraphError(
            f"Edge {edge.source}->{edge.target} of type {edge.edge_type} is directed; "
            "only undirected edges can be decomposed"
        )
    return [
        Edge(edge.source, edge.target, edge.edge_type, edge.weight, True),
        Edge(edge.target, edge.source, edge.edge_type, edge.weight, True),
    ]


class GraphBuilder:
    """
    Accumulates nodes, edge-type declarations and edges, then freezes them
    into an ``HIN``. Every method raises ``GraphError`` naming the offending
    field so file parsers can attach a line number.
    """

    def __init__(self):
        self._node_ids: List[str] = []
        self._node_type_of: List[int] = []
        self._index: Dict[str, int] = {}
        self._node_type_names: List[str] = []
        self._node_type_ids: Dict[str, int] = {}
        self._decls: List[EdgeTypeDecl] = []
        self._decl_by_name: Dict[str, EdgeTypeDecl] = {}
        self._rows: List[List[int]] = []
        self._cols: List[List[int]] = []
        self._weights: List[List[float]] = []

    def add_node(self, node_id: str, node_type: str) -> int:
        if not node_id:
            raise GraphError("Empty node id", field="node_id")
        if not node_type:
            raise GraphError("Empty node type", field="node_type")
        if node_id in self._index:
            raise GraphError(f"Duplicate node id: {node_id}", field="node_id")
        type_id = self._node_type_ids.get(node_type)
        if type_id is None:
            type_id = len(self._node_type_names)
            self._node_type_ids[node_type] = type_id
            self._node_type_names.append(node_type)
        index = len(self._node_ids)
        self._index[node_id] = index
        self._node_ids.append(node_id)
        self._node_type_of.append(type_id)
        return index

    def declare_edge_type(self, name: str, source: str, target: str, directed: bool) -> EdgeTypeDecl:
        if name in self._decl_by_name:
            raise GraphError(f"Edge type declared twice: {name}", field="name")
        for field_name, type_name in (("src_type", source), ("dst_type", target)):
            if type_name not in self._node_type_ids:
                raise GraphError(f"Unknown node type name: {type_name}", field=field_name)
        decl = EdgeTypeDecl(
            id=len(self._decls),
            name=name,
            source=self._node_type_ids[source],
            target=self._node_type_ids[target],
            directed=directed,
        )
        self._decls.append(decl)
        self._decl_by_name[name] = decl
        self._rows.append([])
        self._cols.append([])
        self._weights.append([])
        return decl

    def edge_decl(self, name: str) -> EdgeTypeDecl:
        try:
            return self._decl_by_name[name]
        except KeyError:
            raise GraphError(f"Unknown edge type name: {name}", field="edge_type") from None

    def add_edge(self, source: str, target: str, edge_type: str, weight: float) -> None:
        decl = self.edge_decl(edge_type)
        if not math.isfinite(weight):
            raise GraphError(f"Non-finite weight: {weight}", field="weight")
        if weight < 0:
            raise GraphError(f"Negative weight: {weight}", field="weight")
        for field_name, node_id in (("src_id", source), ("dst_id", target)):
            if node_id not in self._index:
                raise GraphError(f"Dangling endpoint, unknown node id: {node_id}", field=field_name)
        edge = Edge(source, target, edge_type, weight, decl.directed)
        u, v = self._index[source], self._index[target]
        types = (self._node_type_of[u], self._node_type_of[v])
        expected = (decl.source, decl.target)
        if types != expected and (decl.directed or types != expected[::-1]):
            raise GraphError(
                f"Edge {source}->{target} has endpoint types "
                f"({self._node_type_names[types[0]]}, {self._node_type_names[types[1]]}) "
                f"but {edge_type} connects "
                f"({self._node_type_names[decl.source]}, {self._node_type_names[decl.target]})",
                field="edge_type",
            )
        parts = [edge] if decl.directed else decompose_undirected(edge)
        for part in parts:
            self._rows[decl.id].append(self._index[part.source])
            self._cols[decl.id].append(self._index[part.target])
            self._weights[decl.id].append(part.weight)

    def build(self) -> HIN:
        n = len(self._node_ids)
        adjacency = [
            sparse.coo_matrix(
                (np.asarray(w, dtype=np.float64), (np.asarray(r, dtype=np.int64), np.asarray(c, dtype=np.int64))),
                shape=(n, n),
            ).tocsr()
            for r, c, w in zip(self._rows, self._cols, self._weights)
        ]
        return HIN(
            node_ids=self._node_ids,
            node_type_of=np.asarray(self._node_type_of, dtype=np.int64),
            node_types=TypeRegistry(self._node_type_names),
            edge_types=TypeRegistry([d.name for d in self._decls]),
            decls=self._decls,
            adjacency=adjacency,
        )


def build_hin(
    nodes: Iterable[Tuple[str, str]],
    edge_types: Iterable[Tuple[str, str, str, bool]],
    edges: Iterable[Tuple[str, str, str, float]],
) -> HIN:
    """
    Build an HIN from in-memory records.

    Args:
        nodes: (node_id, node_type) pairs
        edge_types: (name, source type, target type, directed) declarations
        edges: (source id, target id, edge type, weight) records

    Raises:
        GraphError: on any inconsistency
    """
    builder = GraphBuilder()
    for node_id, node_type in nodes:
        builder.add_node(node_id, node_type)
    for name, source, target, directed in edge_types:
        builder.declare_edge_type(name, source, target, directed)
    for source, target, edge_type, weight in edges:
        builder.add_edge(source, target, edge_type, float(weight))
    return builder.build()


def read_records(path: Path):
    """Yield (line number, stripped line) for non-comment, non-blank lines."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for number, raw in enumerate(handle, start=1):
                line = raw.rstrip("\r\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                yield number, line
    except FileNotFoundError:
        raise ParseError("File not found", path=path) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"Not valid UTF-8: {exc}", path=path) from None


def parse_edgetype_header(line: str, path: Optional[PathLike], number: int) -> Tuple[str, str, str, bool]:
    """Parse ``%edgetype <name> <src_type> <dst_type> <d|u>``."""
    parts = line.split()
    if len(parts) != 5:
        raise ParseError(
            "Expected '%edgetype <name> <src_type> <dst_type> <d|u>'",
            path=path, line=number, field="%edgetype",
        )
    _, name, source, target, flag = parts
    if flag not in ("d", "u"):
        raise ParseError(f"Directedness must be 'd' or 'u', got '{flag}'", path=path, line=number, field="directedness")
    return name, source, target, flag == "d"


def ingest(node_file: PathLike, edge_file: PathLike) -> HIN:
    """
    Read a node file and an edge file into an HIN.

    Raises:
        ParseError: with file, line number and field for malformed lines,
            unknown type names, negative weights and dangling endpoints
    """
    node_path, edge_path = Path(node_file), Path(edge_file)
    builder = GraphBuilder()

    for number, line in read_records(node_path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("Expected '<node_id>\\t<node_type_name>'", path=node_path, line=number)
        try:
            builder.add_node(parts[0].strip(), parts[1].strip())
        except GraphError as exc:
            raise ParseError(str(exc), path=node_path, line=number, field=exc.field) from None

    for number, line in read_records(edge_path):
        if line.startswith("%"):
            if not line.startswith("%edgetype"):
                raise ParseError("Unknown header line", path=edge_path, line=number, field=line.split()[0])
            header = parse_edgetype_header(line, edge_path, number)
            try:
                builder.declare_edge_type(*header)
            except GraphError as exc:
                raise ParseError(str(exc), path=edge_path, line=number, field=exc.field) from None
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(
                "Expected '<src_id>\\t<dst_id>\\t<edge_type_name>\\t<weight>'",
                path=edge_path, line=number,
            )
        source, target, edge_type, weight_text = (p.strip() for p in parts)
        try:
            weight = float(weight_text)
        except ValueError:
            raise ParseError(f"Weight is not a number: '{weight_text}'", path=edge_path, line=number, field="weight") from None
        try:
            builder.add_edge(source, target, edge_type, weight)
        except GraphError as exc:
            raise ParseError(str(exc), path=edge_path, line=number, field=exc.field) from None

    hin = builder.build()
    logger.info(f"Ingested {hin.num_nodes} nodes: {hin.type_counts()}")
    for decl in hin.decls:
        logger.info(f"Edge type {decl.name}: {hin.num_edges(decl.id)} directed edges, total weight {hin.total_weight(decl.id):g}")
    return hin


def write_hin(hin: HIN, node_file: PathLike, edge_file: PathLike) -> None:
    """
    Serialize an HIN so that ``ingest`` reproduces it exactly.

    Undirected pairs are written once; an undirected self-loop is written with
    half its merged weight because ingestion decomposes it into two loops.
    """
    with open(node_file, "w", encoding="utf-8") as handle:
        handle.write("# node_id\tnode_type\n")
        for index, node_id in enumerate(hin.node_ids):
            handle.write(f"{node_id}\t{hin.node_types.name_of(hin.type_of(index))}\n")

    type_of = hin.node_type_array
    with open(edge_file, "w", encoding="utf-8") as handle:
        for decl in hin.decls:
            handle.write(
                f"%edgetype {decl.name} {hin.node_types.name_of(decl.source)} "
                f"{hin.node_types.name_of(decl.target)} {'d' if decl.directed else 'u'}\n"
            )
        for decl in hin.decls:
            sources, targets, weights = hin.edges(decl.id)
            for u, v, w in zip(sources, targets, weights):
                if not decl.directed:
                    if decl.source == decl.target:
                        if u > v:
                            continue
                        if u == v:
                            w = w / 2.0
                    elif type_of[u] != decl.source:
                        continue
                handle.write(f"{hin.node_ids[u]}\t{hin.node_ids[v]}\t{decl.name}\t{float(w)!r}\n")


def derive_schema(hin: HIN) -> SchemaGraph:
    """
    Abstract the network schema: node types with at least one node and edge
    types with at least one edge.
    """
    node_type_ids = frozenset(
        t for t in range(len(hin.node_types)) if len(hin.nodes_of_type(t)) > 0
    )
    decls = tuple(d for d in hin.decls if hin.num_edges(d.id) > 0)
    return SchemaGraph(hin.node_types, hin.edge_types, node_type_ids, decls)


def degrees(hin: HIN, u: Union[str, int], r: Union[str, int]) -> Tuple[float, float]:
    """
    Weighted (out, in) degree of node ``u`` for edge type ``r``.

    Args:
        u: external node id or internal index
        r: edge type name or id

    Raises:
        GraphError: unknown node id or edge type
    """
    index = hin.node_index(u) if isinstance(u, str) else u
    hin.type_of(index)
    edge_type = hin.edge_types.id_of(r) if isinstance(r, str) else r
    if not 0 <= edge_type < len(hin.decls):
        raise GraphError(f"Unknown edge type id: {edge_type}")
    return float(hin.out_degree(edge_type)[index]), float(hin.in_degree(edge_type)[index])


# aspem/models/hin.py
"""
Heterogeneous Information Network

This module holds the typed, weighted, directed graph every other part of the
package reads from. An ``HIN`` is immutable once built: ingestion assembles the
edge lists, merges duplicates and then freezes the adjacency and degree
indices so the graph can be shared read-only by scoring and training workers.

Key Concepts:
- Node ids are opaque strings in files and dense integers (0..N-1) inside
- Node types and edge types are small dense integers with a name registry
- Every edge type keeps one N x N sparse adjacency over global node ids;
  undirected edge types are stored already decomposed into both directions
- Out/in degree of a node for edge type r is the sum of its incident weights
"""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
from scipy import sparse

from aspem.core.errors import GraphError


class TypeRegistry:
    """
    Bidirectional name <-> id map for node types or edge types.

    Ids are assigned contiguously from 0 in the order names are given.
    """

    def __init__(self, names: Sequence[str] = ()):
        self._names: Tuple[str, ...] = tuple(names)
        self._ids: Dict[str, int] = {}
        for i, name in enumerate(self._names):
            if name in self._ids:
                raise GraphError(f"Duplicate type name: {name}")
            self._ids[name] = i

    def id_of(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise GraphError(f"Unknown type name: {name}") from None

    def name_of(self, type_id: int) -> str:
        return self._names[type_id]

    @property
    def names(self) -> Tuple[str, ...]:
        return self._names

    def __contains__(self, name: object) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypeRegistry) and self._names == other._names

    def __repr__(self):
        return f"<TypeRegistry({', '.join(self._names)})>"


@dataclass(frozen=True)
class EdgeTypeDecl:
    """Declaration of one edge type: its endpoint node types and directedness."""
    id: int
    name: str
    source: int
    target: int
    directed: bool

    def endpoints(self) -> Tuple[int, int]:
        return self.source, self.target

    def touches(self, node_type: int) -> bool:
        return node_type == self.source or node_type == self.target

    def other_end(self, node_type: int) -> int:
        """Endpoint type opposite ``node_type`` (itself for same-type edges)."""
        if node_type == self.source:
            return self.target
        if node_type == self.target:
            return self.source
        raise GraphError(
            f"Edge type {self.name} does not touch node type id {node_type}"
        )


class HIN:
    """
    Immutable heterogeneous information network.

    Attributes:
        node_ids: external id of every node, indexed by internal id
        node_types: registry of node type names
        edge_types: registry of edge type names
        decls: one EdgeTypeDecl per edge type id

    The constructor takes already merged adjacency matrices; use
    ``aspem.operations.graph.ingest`` or ``build_hin`` to create one from
    records.
    """

    def __init__(
        self,
        node_ids: Sequence[str],
        node_type_of: np.ndarray,
        node_types: TypeRegistry,
        edge_types: TypeRegistry,
        decls: Sequence[EdgeTypeDecl],
        adjacency: Sequence[sparse.csr_matrix],
    ):
        self.node_ids: Tuple[str, ...] = tuple(node_ids)
        self.node_types = node_types
        self.edge_types = edge_types
        self.decls: Tuple[EdgeTypeDecl, ...] = tuple(decls)

        self._index: Dict[str, int] = {nid: i for i, nid in enumerate(self.node_ids)}
        if len(self._index) != len(self.node_ids):
            raise GraphError("Node ids must be unique")

        self._type_of = np.asarray(node_type_of, dtype=np.int64)
        self._type_of.setflags(write=False)
        if self._type_of.shape != (len(self.node_ids),):
            raise GraphError("node_type_of must have one entry per node")

        n = len(self.node_ids)
        self._members: List[np.ndarray] = []
        self._local = np.full(n, -1, dtype=np.int64)
        for t in range(len(node_types)):
            members = np.flatnonzero(self._type_of == t)
            members.setflags(write=False)
            self._members.append(members)
            self._local[members] = np.arange(len(members))
        self._local.setflags(write=False)

        if len(adjacency) != len(self.decls):
            raise GraphError("One adjacency matrix is required per edge type")
        self._adjacency: List[sparse.csr_matrix] = []
        self._out_degree: List[np.ndarray] = []
        self._in_degree: List[np.ndarray] = []
        for decl, matrix in zip(self.decls, adjacency):
            matrix = sparse.csr_matrix(matrix, dtype=np.float64)
            if matrix.shape != (n, n):
                raise GraphError(f"Adjacency of {decl.name} must be {n} x {n}")
            matrix.sum_duplicates()
            matrix.eliminate_zeros()
            matrix.sort_indices()
            self._adjacency.append(matrix)
            out_deg = np.asarray(matrix.sum(axis=1)).ravel()
            in_deg = np.asarray(matrix.sum(axis=0)).ravel()
            out_deg.setflags(write=False)
            in_deg.setflags(write=False)
            self._out_degree.append(out_deg)
            self._in_degree.append(in_deg)

    # -- nodes -------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    def node_index(self, node_id: str) -> int:
        """Internal id of an external node id."""
        try:
            return self._index[node_id]
        except KeyError:
            raise GraphError(f"Unknown node id: {node_id}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index

    def type_of(self, node: int) -> int:
        if not 0 <= node < self.num_nodes:
            raise GraphError(f"Unknown node index: {node}")
        return int(self._type_of[node])

    @property
    def node_type_array(self) -> np.ndarray:
        return self._type_of

    def nodes_of_type(self, node_type: int) -> np.ndarray:
        """Sorted internal ids of all nodes with the given type."""
        return self._members[node_type]

    def local_index(self, node: int) -> int:
        """Position of ``node`` among the nodes of its own type."""
        return int(self._local[node])

    def type_counts(self) -> Dict[str, int]:
        return {
            self.node_types.name_of(t): len(self._members[t])
            for t in range(len(self.node_types))
        }

    # -- edges -------------------------------------------------------------

    def decl(self, edge_type: int) -> EdgeTypeDecl:
        return self.decls[edge_type]

    def adjacency(self, edge_type: int) -> sparse.csr_matrix:
        """N x N weighted adjacency of one edge type (global ids)."""
        return self._adjacency[edge_type]

    def out_degree(self, edge_type: int) -> np.ndarray:
        return self._out_degree[edge_type]

    def in_degree(self, edge_type: int) -> np.ndarray:
        return self._in_degree[edge_type]

    def total_weight(self, edge_type: int) -> float:
        return float(self._adjacency[edge_type].sum())

    def num_edges(self, edge_type: int) -> int:
        return int(self._adjacency[edge_type].nnz)

    def weight(self, u: int, v: int, edge_type: int) -> float:
        return float(self._adjacency[edge_type][u, v])

    def edges(self, edge_type: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Directed edges of one type as (sources, targets, weights), row-major."""
        coo = self._adjacency[edge_type].tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.copy()

    def typed_block(
        self, edge_type: int, row_type: int, col_type: int
    ) -> sparse.csr_matrix:
        """
        Sub-adjacency restricted to rows of ``row_type`` and columns of
        ``col_type``, indexed by the local (per-type) positions.
        """
        rows = self._members[row_type]
        cols = self._members[col_type]
        return self._adjacency[edge_type][rows][:, cols].tocsr()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HIN):
            return NotImplemented
        if (
            self.node_ids != other.node_ids
            or self.node_types != other.node_types
            or self.edge_types != other.edge_types
            or self.decls != other.decls
            or not np.array_equal(self._type_of, other._type_of)
        ):
            return False
        return all(
            (a != b).nnz == 0 for a, b in zip(self._adjacency, other._adjacency)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        edges = sum(m.nnz for m in self._adjacency)
        return (
            f"<HIN(nodes={self.num_nodes}, node_types={len(self.node_types)}, "
            f"edge_types={len(self.edge_types)}, directed_edges={edges})>"
        )


@dataclass(frozen=True)
class SchemaGraph:
    """
    Network schema: node types and edge types abstracted from an HIN.

    Attributes:
        node_types: registry shared with the originating graph (names)
        edge_types: registry shared with the originating graph (names)
        node_type_ids: the node types present in the schema
        decls: declarations of the edge types present, sorted by id
    """
    node_types: TypeRegistry
    edge_types: TypeRegistry
    node_type_ids: frozenset
    decls: Tuple[EdgeTypeDecl, ...]

    def __post_init__(self):
        for decl in self.decls:
            if decl.source not in self.node_type_ids or decl.target not in self.node_type_ids:
                raise GraphError(
                    f"Schema edge {decl.name} has an endpoint outside the node-type set"
                )

    @property
    def edge_type_ids(self) -> Tuple[int, ...]:
        return tuple(d.id for d in self.decls)

    def decl(self, edge_type: int) -> EdgeTypeDecl:
        for d in self.decls:
            if d.id == edge_type:
                return d
        raise GraphError(f"Edge type id {edge_type} is not in the schema")

    def decl_by_name(self, name: str) -> EdgeTypeDecl:
        return self.decl(self.edge_types.id_of(name))

    def node_type_id(self, name: str) -> int:
        type_id = self.node_types.id_of(name)
        if type_id not in self.node_type_ids:
            raise GraphError(f"Node type {name} is not in the schema")
        return type_id

    def incident(self, node_type: int) -> Tuple[EdgeTypeDecl, ...]:
        return tuple(d for d in self.decls if d.touches(node_type))

    def reachable_from(self, node_type: int) -> frozenset:
        """Node types connected to ``node_type`` through schema edges."""
        seen = {node_type}
        frontier = [node_type]
        while frontier:
            current = frontier.pop()
            for d in self.incident(current):
                for end in d.endpoints():
                    if end not in seen:
                        seen.add(end)
                        frontier.append(end)
        return frozenset(seen)

    def describe(self) -> List[str]:
        """``%edgetype`` header lines describing this schema."""
        return [
            f"%edgetype {d.name} {self.node_types.name_of(d.source)} "
            f"{self.node_types.name_of(d.target)} {'d' if d.directed else 'u'}"
            for d in self.decls
        ]

# tests/unit/test_graph.py

import numpy as np
import pytest

from aspem.core.errors import GraphError, ParseError
from aspem.operations.graph import Edge, build_hin, decompose_undirected, degrees, derive_schema, ingest, write_hin
from tests.conftest import random_star_hin, write_lines


# ---------------------------------------------
# decompose_undirected
# ---------------------------------------------

@pytest.mark.parametrize(
    "edge, expected",
    [
        (Edge("u", "v", "r", 2.5, False), [("u", "v", 2.5), ("v", "u", 2.5)]),
        (Edge("u", "u", "r", 1.0, False), [("u", "u", 1.0), ("u", "u", 1.0)]),
    ],
    ids=["plain_edge", "self_loop"],
)
def test_decompose_undirected(edge, expected):
    """
    Test that an undirected edge becomes two directed edges of equal weight.

    Steps:
    1. Decompose the edge.
    2. Assert both halves are directed and match the expected endpoints.
    """
    parts = decompose_undirected(edge)
    assert [(p.source, p.target, p.weight) for p in parts] == expected, f"Unexpected halves {parts}"
    assert all(p.directed for p in parts), "Both halves must be directed"


def test_decompose_directed_edge_rejected():
    with pytest.raises(GraphError):
        decompose_undirected(Edge("u", "v", "r", 1.0, True))


# ---------------------------------------------
# ingest
# ---------------------------------------------

def test_ingest_single_undirected_edge(tmp_path):
    """Two nodes and one undirected edge give two directed edges of weight 1."""
    nodes = write_lines(tmp_path / "nodes.tsv", ["# id\ttype", "a\tA", "p\tP"])
    edges = write_lines(tmp_path / "edges.tsv", ["%edgetype write A P u", "a\tp\twrite\t1.0"])
    hin = ingest(nodes, edges)
    r = hin.edge_types.id_of("write")
    assert hin.num_edges(r) == 2, f"Expected 2 directed edges, got {hin.num_edges(r)}"
    assert hin.weight(hin.node_index("a"), hin.node_index("p"), r) == 1.0
    assert hin.weight(hin.node_index("p"), hin.node_index("a"), r) == 1.0


def test_ingest_merges_duplicate_pairs(tmp_path):
    nodes = write_lines(tmp_path / "nodes.tsv", ["a\tA", "p\tP"])
    edges = write_lines(tmp_path / "edges.tsv", ["%edgetype write A P d", "a\tp\twrite\t1.5", "a\tp\twrite\t2"])
    hin = ingest(nodes, edges)
    assert hin.weight(0, 1, 0) == 3.5, "Duplicate pairs must be merged by summing weights"
    assert hin.num_edges(0) == 1


@pytest.mark.parametrize(
    "node_lines, edge_lines, line, field, fragment",
    [
        (["a\tA", "p\tP"], ["%edgetype write A P u", "a\tq\twrite\t1"], 2, "dst_id", "q"),
        (["a\tA", "p\tP"], ["%edgetype write A P u", "a\tp\twrite\t-1"], 2, "weight", "Negative"),
        (["a\tA", "p\tP"], ["%edgetype write A X u"], 1, "dst_type", "X"),
        (["a\tA", "p\tP"], ["%edgetype write A P u", "a\tp\tcite\t1"], 2, "edge_type", "cite"),
        (["a\tA", "p\tP"], ["%edgetype write A P u", "a\tp\twrite\tone"], 2, "weight", "one"),
        (["a\tA", "p\tP"], ["%edgetype write A P x"], 1, "directedness", "'x'"),
        (["a\tA", "a\tP"], ["%edgetype write A P u"], None, "node_id", "Duplicate"),
        (["a A"], ["%edgetype write A P u"], None, None, "Expected"),
    ],
    ids=[
        "dangling_endpoint",
        "negative_weight",
        "unknown_type_in_header",
        "unknown_edge_type",
        "non_numeric_weight",
        "bad_directedness",
        "duplicate_node",
        "malformed_node_line",
    ],
)
def test_ingest_errors(tmp_path, node_lines, edge_lines, line, field, fragment):
    """
    Test that malformed input raises a ParseError locating the problem.

    Parameters:
    - line: expected 1-based line number in the edge file (None for node-file errors)
    - field: expected offending field name
    - fragment: text the message must contain
    """
    nodes = write_lines(tmp_path / "nodes.tsv", node_lines)
    edges = write_lines(tmp_path / "edges.tsv", edge_lines)
    with pytest.raises(ParseError) as info:
        ingest(nodes, edges)
    error = info.value
    assert fragment in str(error), f"Message {error} should mention {fragment}"
    assert error.field == field, f"Expected field {field}, got {error.field}"
    if line is not None:
        assert error.line == line and error.path == str(edges), f"Wrong location: {error.path}:{error.line}"


def test_ingest_missing_file(tmp_path):
    with pytest.raises(ParseError, match="File not found"):
        ingest(tmp_path / "absent.tsv", tmp_path / "absent_edges.tsv")


def test_ingest_imdb_shaped_counts(tmp_path):
    """Node counts per type are reported exactly for an IMDb-shaped node table."""
    counts = {"U": 943, "M": 1360, "A": 42275, "D": 918, "G": 23}
    lines = [f"{t.lower()}{i}\t{t}" for t, n in counts.items() for i in range(n)]
    nodes = write_lines(tmp_path / "nodes.tsv", lines)
    edges = write_lines(tmp_path / "edges.tsv", ["%edgetype review U M u", "u0\tm0\treview\t1"])
    hin = ingest(nodes, edges)
    assert hin.type_counts() == counts, f"Unexpected counts {hin.type_counts()}"


@pytest.mark.parametrize("seed", range(5))
def test_write_then_ingest_round_trip(tmp_path, seed):
    """Serializing and re-ingesting reproduces an identical HIN."""
    hin = random_star_hin(seed)
    write_hin(hin, tmp_path / "n.tsv", tmp_path / "e.tsv")
    assert ingest(tmp_path / "n.tsv", tmp_path / "e.tsv") == hin, "Round trip changed the graph"


def test_round_trip_keeps_undirected_self_loops(tmp_path):
    hin = build_hin([("x", "X")], [("knows", "X", "X", False)], [("x", "x", "knows", 1.0)])
    write_hin(hin, tmp_path / "n.tsv", tmp_path / "e.tsv")
    again = ingest(tmp_path / "n.tsv", tmp_path / "e.tsv")
    assert again == hin
    assert degrees(again, "x", "knows") == (2.0, 2.0), "A self-loop counts in both degree indices"


# ---------------------------------------------
# schema and degrees
# ---------------------------------------------

def test_derive_schema_dblp_shape():
    """A DBLP-shaped graph has six node types and five edge types, all touching P."""
    others = {"write": "A", "cite": "R", "contain": "T", "publish": "V", "year": "Y"}
    nodes = [("p", "P")] + [(t.lower(), t) for t in others.values()]
    declarations = [(name, "P", t, False) for name, t in others.items()]
    edges = [("p", t.lower(), name, 1.0) for name, t in others.items()]
    schema = derive_schema(build_hin(nodes, declarations, edges))
    names = {schema.node_types.name_of(t) for t in schema.node_type_ids}
    assert names == {"A", "P", "R", "T", "V", "Y"}
    assert len(schema.decls) == 5
    p = schema.node_type_id("P")
    assert all(d.touches(p) for d in schema.decls), "Every DBLP edge type is incident to P"


def test_derive_schema_skips_edge_types_without_edges():
    hin = build_hin(
        [("a", "A"), ("b", "A"), ("z", "Z")],
        [("knows", "A", "A", False), ("likes", "A", "Z", True)],
        [("a", "b", "knows", 1.0)],
    )
    schema = derive_schema(hin)
    assert [d.name for d in schema.decls] == ["knows"], "Edge types without edges are not in the schema"
    assert schema.node_type_ids == frozenset({hin.node_types.id_of("A"), hin.node_types.id_of("Z")})


def test_degrees_sum_weights():
    hin = build_hin(
        [("u", "U"), ("v1", "V"), ("v2", "V"), ("v3", "V"), ("w", "W")],
        [("r", "U", "V", True), ("s", "V", "W", True)],
        [("u", "v1", "r", 1.0), ("u", "v2", "r", 2.0), ("u", "v3", "r", 5.0), ("v1", "w", "s", 1.0)],
    )
    assert degrees(hin, "u", "r") == (8.0, 0.0)
    assert degrees(hin, "u", "s") == (0.0, 0.0), "A node whose type does not touch r has zero degrees"
    with pytest.raises(GraphError):
        degrees(hin, "nobody", "r")


@pytest.mark.parametrize("seed", range(100))
def test_degrees_match_edge_scan(seed):
    """Degree indices equal a brute-force scan of the edge list; totals agree on both sides."""
    hin = random_star_hin(seed, max_nodes=6)
    for r in range(len(hin.decls)):
        sources, targets, weights = hin.edges(r)
        out_scan = np.zeros(hin.num_nodes)
        in_scan = np.zeros(hin.num_nodes)
        for u, v, w in zip(sources, targets, weights):
            out_scan[u] += w
            in_scan[v] += w
        assert np.array_equal(out_scan, hin.out_degree(r))
        assert np.array_equal(in_scan, hin.in_degree(r))
        assert hin.out_degree(r).sum() == hin.in_degree(r).sum() == hin.total_weight(r)

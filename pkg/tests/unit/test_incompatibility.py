# tests/unit/test_incompatibility.py

"""
Incompatibility statistic: sub-aspect enumeration, per-node gamma against a
dense brute force, aggregation over the shipped score tables and the
structural properties of aspect scores.
"""

import numpy as np
import pytest

from aspem.core.errors import GraphError, ParseError, SelectionError
from aspem.models.aspect import ScoreTable, aspect_from_name, full_schema_aspect
from aspem.models.hin import EdgeTypeDecl, SchemaGraph, TypeRegistry
from aspem.operations.graph import build_hin, derive_schema
from aspem.operations.incompatibility import (
    enumerate_sub_aspects,
    gamma,
    gamma_values,
    inc_aspect,
    inc_simple,
    read_score_table,
    score_table,
    sub_aspects_of_edge_types,
    write_score_table,
)
from aspem.operations.selection import enumerate_candidate_aspects
from tests.conftest import random_star_hin, write_lines


# ---------------------------------------------
# Dense oracle
# ---------------------------------------------

def dense_side(hin, edge_type, center, other):
    """Row-normalized center -> other matrix built from the dense adjacency."""
    decl = hin.decl(edge_type)
    matrix = hin.adjacency(edge_type).toarray()
    centers, others = hin.nodes_of_type(center), hin.nodes_of_type(other)
    if decl.directed and decl.target == center and decl.source != center:
        block = matrix[np.ix_(others, centers)].T
    else:
        block = matrix[np.ix_(centers, others)]
    sums = block.sum(axis=1, keepdims=True)
    return np.divide(block, sums, out=np.zeros_like(block), where=sums > 0)


def dense_gamma(hin, s):
    left = dense_side(hin, s.left_edge, s.center, s.left)
    right = dense_side(hin, s.right_edge, s.center, s.right)
    values = []
    for u in range(left.shape[0]):
        x = right @ right[u]
        y = left @ left[u]
        low = np.minimum(x, y).sum()
        values.append(np.maximum(x, y).sum() / low - 1.0 if low > 0 else np.nan)
    return np.array(values)


# ---------------------------------------------
# Sub-aspect enumeration
# ---------------------------------------------

def test_dblp_full_schema_has_ten_sub_aspects(dblp_scores):
    schema = dblp_scores.schema
    subs = enumerate_sub_aspects(full_schema_aspect(schema), schema)
    assert len(subs) == 10, f"Expected 10 sub-aspects, got {len(subs)}"
    assert all(s == s.canonical() for s in subs), "Enumerated sub-aspects must be canonical"


@pytest.mark.parametrize(
    "name, expected",
    [("AP", []), ("APY", ["A-P-Y"])],
    ids=["single_edge_type", "two_edge_types"],
)
def test_enumerate_sub_aspects_small_aspects(dblp_scores, name, expected):
    schema = dblp_scores.schema
    subs = enumerate_sub_aspects(aspect_from_name(schema, name), schema)
    labels = sorted(min(s.label(schema), s.mirror().label(schema)) for s in subs)
    assert labels == expected, f"{name}: got {labels}"


def test_mirror_orientations_collapse(dblp_scores):
    schema = dblp_scores.schema
    s = enumerate_sub_aspects(aspect_from_name(schema, "APY"), schema)[0]
    assert dblp_scores[s] == dblp_scores[s.mirror()] == 221267.0


# ---------------------------------------------
# gamma
# ---------------------------------------------

def hand_graph(right_edges):
    """Centers p1, p2 both linked to a1; right side V edges as given."""
    return build_hin(
        [("a1", "A"), ("p1", "P"), ("p2", "P"), ("v1", "V"), ("v2", "V")],
        [("write", "A", "P", False), ("publish", "P", "V", False)],
        [("a1", "p1", "write", 1.0), ("a1", "p2", "write", 1.0)] + right_edges,
    )


def test_gamma_hand_instance():
    """
    Both centers share their only author but have different venues: for each
    center the max-sum is 2 and the min-sum is 1, so gamma = 1.
    """
    hin = hand_graph([("p1", "v1", "publish", 1.0), ("p2", "v2", "publish", 1.0)])
    s = sub_aspects_of_edge_types(derive_schema(hin), [0, 1])[0]
    assert gamma(hin, "p1", s) == pytest.approx(1.0, abs=1e-12)
    assert gamma(hin, "p2", s) == pytest.approx(1.0, abs=1e-12)
    assert inc_simple(hin, s) == pytest.approx(1.0, abs=1e-12)


def test_gamma_excluded_center():
    hin = hand_graph([("p1", "v1", "publish", 1.0)])
    s = sub_aspects_of_edge_types(derive_schema(hin), [0, 1])[0]
    assert gamma(hin, "p2", s) is None, "A center without right-side edges is excluded"
    assert gamma(hin, "p1", s) is not None


def test_gamma_rejects_wrong_center_type():
    hin = hand_graph([("p1", "v1", "publish", 1.0)])
    s = sub_aspects_of_edge_types(derive_schema(hin), [0, 1])[0]
    with pytest.raises(GraphError):
        gamma(hin, "a1", s)


def test_identical_edge_types_have_zero_gamma():
    """Two edge types with the same adjacency pattern never disagree."""
    rng = np.random.default_rng(3)
    nodes = [(f"p{i}", "P") for i in range(8)] + [(f"x{j}", "X") for j in range(5)] + [(f"y{j}", "Y") for j in range(5)]
    edges = []
    for i in range(8):
        for j in rng.choice(5, size=2, replace=False):
            edges += [(f"p{i}", f"x{j}", "hasx", 1.0), (f"p{i}", f"y{j}", "hasy", 1.0)]
    hin = build_hin(nodes, [("hasx", "P", "X", False), ("hasy", "P", "Y", False)], edges)
    s = sub_aspects_of_edge_types(derive_schema(hin), [0, 1])[0]
    values = gamma_values(hin, s)
    assert np.allclose(values[~np.isnan(values)], 0.0, atol=1e-12)
    assert inc_simple(hin, s) == pytest.approx(0.0, abs=1e-12)


def test_inc_simple_all_excluded_is_zero():
    hin = build_hin(
        [("a", "A"), ("p", "P"), ("q", "P"), ("v", "V")],
        [("write", "A", "P", False), ("publish", "P", "V", False)],
        [("a", "p", "write", 1.0), ("q", "v", "publish", 1.0)],
    )
    s = sub_aspects_of_edge_types(derive_schema(hin), [0, 1])[0]
    assert inc_simple(hin, s) == 0.0


@pytest.mark.parametrize("seed", range(50))
def test_sparse_gamma_matches_dense_oracle(seed):
    """Sparse gamma and inc_simple equal the dense max/min brute force within 1e-9."""
    hin = random_star_hin(seed, edge_types=int(seed % 2) + 2, max_nodes=50, density=0.1)
    schema = derive_schema(hin)
    for s in sub_aspects_of_edge_types(schema, schema.edge_type_ids):
        expected = dense_gamma(hin, s)
        actual = gamma_values(hin, s, chunk_size=7)
        assert np.array_equal(np.isnan(actual), np.isnan(expected)), "Exclusions differ"
        kept = ~np.isnan(expected)
        assert np.allclose(actual[kept], expected[kept], rtol=0, atol=1e-9)
        assert np.all(actual[kept] >= -1e-12), "gamma is nonnegative"
        oracle_inc = float(np.mean(expected[kept])) if kept.any() else 0.0
        assert inc_simple(hin, s) == pytest.approx(oracle_inc, abs=1e-9)


def test_gamma_values_independent_of_workers():
    hin = random_star_hin(11, max_nodes=40)
    schema = derive_schema(hin)
    s = sub_aspects_of_edge_types(schema, schema.edge_type_ids)[0]
    one = gamma_values(hin, s, workers=1, chunk_size=5)
    four = gamma_values(hin, s, workers=4, chunk_size=5)
    assert np.array_equal(one, four, equal_nan=True)


# ---------------------------------------------
# Aggregation over the shipped score tables
# ---------------------------------------------

@pytest.mark.parametrize(
    "name, expected",
    [("APRTV", 28139.852), ("YPRTV", 75426.944), ("AP", 0.0)],
    ids=["aprtv", "yprtv", "single_edge_type"],
)
def test_inc_aspect_dblp(dblp_scores, name, expected):
    value = inc_aspect(dblp_scores, aspect_from_name(dblp_scores.schema, name))
    assert value == pytest.approx(expected, abs=0.05), f"Inc({name}) = {value}"


def test_inc_aspect_missing_score(dblp_scores):
    partial = ScoreTable(dblp_scores.schema, dict(list(dblp_scores.items())[:3]))
    with pytest.raises(SelectionError, match="Missing incompatibility score"):
        inc_aspect(partial, full_schema_aspect(dblp_scores.schema))


# ---------------------------------------------
# Properties of aspect scores
# ---------------------------------------------

def random_schema(rng):
    n_types = int(rng.integers(2, 6))
    names = [f"T{i}" for i in range(n_types)]
    decls = []
    # a random spanning tree keeps every type connected, extra edges add cycles
    for t in range(1, n_types):
        decls.append((int(rng.integers(t)), t))
    for _ in range(int(rng.integers(0, 3))):
        decls.append(tuple(int(x) for x in rng.choice(n_types, size=2, replace=False)))
    declarations = tuple(
        EdgeTypeDecl(i, f"e{i}", source, target, False) for i, (source, target) in enumerate(decls)
    )
    return SchemaGraph(
        TypeRegistry(names),
        TypeRegistry([d.name for d in declarations]),
        frozenset(range(n_types)),
        declarations,
    )


@pytest.mark.parametrize("seed", range(100))
def test_aspect_score_properties(seed):
    """
    Non-negativity, monotonicity under inclusion and superadditivity over
    edge-disjoint unions hold exactly (integer-valued scores keep sums exact).
    """
    rng = np.random.default_rng(seed)
    schema = random_schema(rng)
    scores = ScoreTable(schema, {
        s: float(rng.integers(0, 1000)) for s in sub_aspects_of_edge_types(schema, schema.edge_type_ids)
    })
    inc = {a.edge_types: inc_aspect(scores, a) for a in enumerate_candidate_aspects(schema)}

    assert all(v >= 0 for v in inc.values())
    for e1, v1 in inc.items():
        for e2, v2 in inc.items():
            if e1 < e2:
                assert v1 <= v2, f"Monotonicity violated for {sorted(e1)} < {sorted(e2)}"
            if not e1 & e2 and (e1 | e2) in inc:
                assert v1 + v2 <= inc[e1 | e2], f"Superadditivity violated for {sorted(e1)}, {sorted(e2)}"


# ---------------------------------------------
# Score table files
# ---------------------------------------------

def test_score_table_round_trip(tmp_path):
    hin = random_star_hin(4)
    scores = score_table(hin)
    write_score_table(scores, tmp_path / "scores.tsv")
    again = read_score_table(tmp_path / "scores.tsv", scores.schema)
    assert again.items() == scores.items(), "Scores changed across a write/read cycle"
    inferred = read_score_table(tmp_path / "scores.tsv")
    assert [d.name for d in inferred.schema.decls] == [d.name for d in scores.schema.decls]
    assert len(inferred) == len(scores)


def test_score_table_without_headers(tmp_path):
    path = write_lines(tmp_path / "scores.tsv", ["%subaspect A write P year Y 3.5"])
    scores = read_score_table(path)
    a = aspect_from_name(scores.schema, "APY")
    assert inc_aspect(scores, a) == 3.5


@pytest.mark.parametrize(
    "lines, fragment",
    [
        (["%edgetype write A P u", "%edgetype year P Y u", "%subaspect A write P year Y -1"], "nonnegative"),
        (["%edgetype write A P u", "%edgetype year P Y u", "%subaspect A write P year Y"], "Expected"),
        (["%edgetype write A P u", "%edgetype year P Y u", "%subaspect A write P year Y abc"], "not a number"),
        (["%edgetype write A P u", "%edgetype year P Y u", "%subaspect A year P write Y 1"], "does not match"),
        (["A write P year Y 1"], "Expected a %edgetype"),
    ],
    ids=["negative_score", "short_line", "non_numeric", "wrong_endpoints", "missing_prefix"],
)
def test_score_table_parse_errors(tmp_path, lines, fragment):
    path = write_lines(tmp_path / "scores.tsv", lines)
    with pytest.raises(ParseError, match=fragment):
        read_score_table(path)

# tests/unit/test_selection.py

import numpy as np
import pytest

from aspem.core.errors import SelectionError
from aspem.models.aspect import ScoreTable
from aspem.models.hin import EdgeTypeDecl, SchemaGraph, TypeRegistry
from aspem.operations.incompatibility import sub_aspects_of_edge_types
from aspem.operations.selection import (
    choose_threshold,
    covered_types,
    enumerate_candidate_aspects,
    select_aspects,
)


def names(aspects):
    return [a.name for a in aspects]


# ---------------------------------------------
# Candidate enumeration
# ---------------------------------------------

@pytest.mark.parametrize(
    "fixture, anchor, expected",
    [("dblp_scores", "A", 16), ("imdb_scores", "U", 8), ("dblp_scores", "Q", 0)],
    ids=["dblp_anchor_a", "imdb_anchor_u", "absent_anchor"],
)
def test_candidate_counts(request, fixture, anchor, expected):
    schema = request.getfixturevalue(fixture).schema
    candidates = enumerate_candidate_aspects(schema, [anchor])
    assert len(candidates) == expected, f"Expected {expected} candidates, got {len(candidates)}"


def test_candidates_are_connected_and_ordered(dblp_scores):
    candidates = enumerate_candidate_aspects(dblp_scores.schema, ["A"])
    assert candidates[0].name == "AP", "The smallest candidate comes first"
    sizes = [len(a.edge_types) for a in candidates]
    assert sizes == sorted(sizes)


def test_candidate_guard(dblp_scores):
    with pytest.raises(SelectionError, match="limited"):
        enumerate_candidate_aspects(dblp_scores.schema, ["A"], limit=4)


# ---------------------------------------------
# Threshold selection on the shipped score tables
# ---------------------------------------------

@pytest.mark.parametrize(
    "fixture, anchor, theta, expected",
    [
        ("imdb_scores", "U", 1927.68, ["UMA", "UMD", "UMG"]),
        ("dblp_scores", "A", 221267, ["APRTV", "APY"]),
        ("dblp_scores", "A", 0, ["AP"]),
    ],
    ids=["imdb_paper_threshold", "dblp_paper_threshold", "zero_threshold"],
)
def test_select_aspects(request, fixture, anchor, theta, expected):
    """
    Test threshold selection with the maximality rule.

    Steps:
    1. Load the score table fixture.
    2. Select aspects containing the anchor at the given threshold.
    3. Assert the selected aspect names, largest aspect first.
    """
    scores = request.getfixturevalue(fixture)
    selected = select_aspects(scores, scores.schema, theta, [anchor])
    assert names(selected) == expected, f"theta={theta}: got {names(selected)}"


def test_threshold_is_inclusive(imdb_scores):
    """UMD scores exactly 1927.68 and is still selected at that threshold."""
    selected = names(select_aspects(imdb_scores, imdb_scores.schema, 1927.68, ["U"]))
    assert "UMD" in selected
    below = names(select_aspects(imdb_scores, imdb_scores.schema, 1927.67, ["U"]))
    assert "UMD" not in below


@pytest.mark.parametrize("theta", [0, 150, 2000, 28139.852, 221267, 1e7])
def test_selection_is_largest_first(dblp_scores, theta):
    """Selected aspects come out with more edge types first, ties broken by edge type ids."""
    selected = select_aspects(dblp_scores, dblp_scores.schema, theta, ["A"])
    keys = [(-len(a.edge_types), sorted(a.edge_types)) for a in selected]
    assert keys == sorted(keys), f"theta={theta}: got {names(selected)}"


def test_selection_order_ties_by_edge_type_ids(imdb_scores):
    selected = select_aspects(imdb_scores, imdb_scores.schema, 1927.68, ["U"])
    assert [sorted(a.edge_types) for a in selected] == [[0, 1], [0, 2], [0, 3]]


def test_negative_threshold_rejected(imdb_scores):
    with pytest.raises(SelectionError):
        select_aspects(imdb_scores, imdb_scores.schema, -1.0, ["U"])


@pytest.mark.parametrize(
    "fixture, anchor, expected",
    [("dblp_scores", "A", 221267.0), ("imdb_scores", "U", 1927.68)],
    ids=["dblp", "imdb"],
)
def test_choose_threshold(request, fixture, anchor, expected):
    scores = request.getfixturevalue(fixture)
    theta = choose_threshold(scores, scores.schema, anchor)
    assert theta == expected, f"Expected {expected}, got {theta}"


def test_choose_threshold_single_edge_type():
    decl = EdgeTypeDecl(0, "knows", 0, 1, False)
    schema = SchemaGraph(TypeRegistry(["A", "B"]), TypeRegistry(["knows"]), frozenset({0, 1}), (decl,))
    assert choose_threshold(ScoreTable(schema), schema, "A") == 0.0


def test_choose_threshold_unreachable_types():
    decls = (EdgeTypeDecl(0, "ab", 0, 1, False), EdgeTypeDecl(1, "cd", 2, 3, False))
    schema = SchemaGraph(TypeRegistry(["A", "B", "C", "D"]), TypeRegistry(["ab", "cd"]), frozenset(range(4)), decls)
    with pytest.raises(SelectionError, match="C, D"):
        choose_threshold(ScoreTable(schema), schema, "A")


def test_choose_threshold_unknown_anchor(dblp_scores):
    with pytest.raises(SelectionError):
        choose_threshold(dblp_scores, dblp_scores.schema, "Q")


# ---------------------------------------------
# Coverage monotonicity
# ---------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_coverage_grows_with_threshold(seed):
    """Raising theta never removes a node type from the anchor's coverage."""
    rng = np.random.default_rng(seed)
    node_types = TypeRegistry(["H", "A", "B", "C", "D"])
    decls = tuple(EdgeTypeDecl(i, f"e{i}", 0, i + 1, False) for i in range(4))
    schema = SchemaGraph(node_types, TypeRegistry([d.name for d in decls]), frozenset(range(5)), decls)
    scores = ScoreTable(schema, {
        s: float(rng.uniform(0, 100)) for s in sub_aspects_of_edge_types(schema, schema.edge_type_ids)
    })
    previous = frozenset()
    for theta in np.linspace(0, 400, 41):
        covered = covered_types(scores, schema, float(theta), "A")
        assert previous <= covered, f"Coverage shrank at theta={theta}"
        previous = covered

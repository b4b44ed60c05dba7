# tests/integration/test_holdout.py

import pytest

from aspem.core.errors import EvaluationError, ParseError
from aspem.operations.holdout import (
    holdout_queries,
    read_instances,
    read_labels,
    remove_nodes,
    sample_linkpred_instances,
    write_attributes,
    write_instances,
    write_labels,
)
from aspem.operations.synthetic import planted_two_aspect
from tests.conftest import write_lines


@pytest.fixture(scope="module")
def planted():
    return planted_two_aspect(anchors=40, items_per_anchor=3, seed=0)


def test_remove_nodes_drops_incident_edges(toy_hin):
    graph = remove_nodes(toy_hin, ["p2"])
    assert "p2" not in graph.node_ids
    write = graph.edge_types.id_of("write")
    assert graph.num_edges(write) == 2, "Only a1-p1 (both directions) should remain"
    assert graph.total_weight(graph.edge_types.id_of("publish")) == 2.0


def test_candidates_hold_true_neighbours_and_negatives(planted):
    hin = planted.hin
    instances = sample_linkpred_instances(hin, ["p0", "p1"], "write", ["hasx", "hasy"], num_candidates=10, seed=0)
    for instance in instances:
        assert instance.size == 10
        assert sum(instance.labels) == 1, "Every item has exactly one author"
        assert all(c.startswith("a") for c in instance.candidates)
        assert len(instance.attributes["hasx"]) == 1 and len(instance.attributes["hasy"]) == 1
    assert instances[0].candidates[instances[0].labels.index(1)] == "a0"


def test_candidate_sampling_is_seeded(planted):
    args = (planted.hin, ["p3", "p4"], "write", ["hasx"])
    assert sample_linkpred_instances(*args, num_candidates=8, seed=5) == sample_linkpred_instances(*args, num_candidates=8, seed=5)


def test_target_edge_type_cannot_be_an_attribute(planted):
    with pytest.raises(EvaluationError):
        sample_linkpred_instances(planted.hin, ["p0"], "write", ["write"])


def test_holdout_removes_test_queries(planted):
    task = holdout_queries(planted.hin, "P", "write", ["hasx", "hasy"], test_fraction=0.25, train_queries=50,
                           num_candidates=20, seed=1)
    test_queries = {i.query for i in task.test}
    train_queries = {i.query for i in task.train}
    assert len(task.test) == 30, "A quarter of the 120 linked items"
    assert len(task.train) == 50
    assert not test_queries & train_queries
    assert not test_queries & set(task.train_graph.node_ids), "Test queries must not reach training"
    assert task.train_graph.num_nodes == planted.hin.num_nodes - 30


def test_task_files_round_trip(tmp_path, planted):
    task = holdout_queries(planted.hin, "P", "write", ["hasx", "hasy"], train_queries=10, num_candidates=5, seed=2)
    write_instances(task.train, tmp_path / "train.tsv")
    write_instances(task.test, tmp_path / "test.tsv")
    write_attributes(task.train + task.test, tmp_path / "attributes.tsv")
    assert read_instances(tmp_path / "train.tsv", tmp_path / "attributes.tsv") == task.train
    assert read_instances(tmp_path / "test.tsv", tmp_path / "attributes.tsv") == task.test


@pytest.mark.parametrize(
    "lines, fragment",
    [(["q\tc"], "Expected"), (["q\tc\t2"], "Label must be 0 or 1"), (["q\tc\t0"], "no true candidate")],
    ids=["short_row", "bad_label", "no_positive"],
)
def test_instance_file_errors(tmp_path, lines, fragment):
    instance_file = write_lines(tmp_path / "i.tsv", lines)
    attribute_file = write_lines(tmp_path / "a.tsv", [])
    with pytest.raises(ParseError, match=fragment):
        read_instances(instance_file, attribute_file)


def test_labels_round_trip_and_duplicates(tmp_path, planted):
    write_labels(planted.labels, tmp_path / "labels.tsv")
    assert read_labels(tmp_path / "labels.tsv") == planted.labels
    duplicate = write_lines(tmp_path / "dup.tsv", ["a\tx", "a\ty"])
    with pytest.raises(ParseError, match="Duplicate"):
        read_labels(duplicate)

# tests/integration/test_training_runs.py
"""
Full training runs on small graphs: reproducibility, coverage of the aspect's
nodes, and whether the learned vectors reflect planted structure.
"""

import numpy as np
import pytest

from aspem.core.errors import TrainingError
from aspem.models.aspect import aspect_from_name, full_schema_aspect
from aspem.operations.compose import write_embedding
from aspem.operations.graph import build_hin, derive_schema
from aspem.operations.synthetic import planted_bipartite
from aspem.operations.training import objective, train_aspect, train_onespace
from aspem.schemas.config import TrainConfig


@pytest.fixture(scope="module")
def bipartite():
    return planted_bipartite(nodes_per_block=50, blocks=2, degree=5, seed=0)


# ---------------------------------------------
# Reproducibility and coverage
# ---------------------------------------------

def test_single_worker_runs_are_byte_identical(tmp_path, toy_hin, toy_schema):
    cfg = TrainConfig(dimension=8, samples=5_000, seed=11)
    aspect = full_schema_aspect(toy_schema)
    first = write_embedding(train_aspect(toy_hin, aspect, cfg), tmp_path / "first.emb")
    second = write_embedding(train_aspect(toy_hin, aspect, cfg), tmp_path / "second.emb")
    assert first.read_bytes() == second.read_bytes(), "Same seed and one worker must reproduce the file"


def test_different_seeds_differ(toy_hin, toy_schema):
    aspect = full_schema_aspect(toy_schema)
    a = train_aspect(toy_hin, aspect, TrainConfig(dimension=4, samples=1_000, seed=1))
    b = train_aspect(toy_hin, aspect, TrainConfig(dimension=4, samples=1_000, seed=2))
    assert a != b


def test_table_covers_exactly_the_aspect_types(toy_hin, toy_schema):
    aspect = aspect_from_name(toy_schema, "AP")
    table = train_aspect(toy_hin, aspect, TrainConfig(dimension=6, samples=2_000))
    assert set(table.node_ids) == {"a1", "a2", "p1", "p2"}
    assert table.dimension == 6 and table.aspect == "AP"


@pytest.mark.parametrize("workers", [2, 4])
def test_parallel_training_gives_finite_vectors(bipartite, workers):
    schema = derive_schema(bipartite.hin)
    table = train_onespace(bipartite.hin, schema, TrainConfig(dimension=8, samples=20_000, workers=workers))
    assert len(table) == bipartite.hin.num_nodes
    assert table.is_finite()


def test_isolated_nodes_keep_initial_vectors():
    hin = build_hin(
        [("a", "A"), ("b", "A"), ("lonely", "A"), ("p", "P")],
        [("write", "A", "P", False)],
        [("a", "p", "write", 1.0), ("b", "p", "write", 1.0)],
    )
    cfg = TrainConfig(dimension=4, samples=1_000, seed=3)
    table = train_aspect(hin, full_schema_aspect(derive_schema(hin)), cfg)
    assert np.all(np.abs(table.vector("lonely")) <= 0.5 / 4)


def test_trained_table_is_read_only(toy_hin, toy_schema):
    table = train_aspect(toy_hin, full_schema_aspect(toy_schema), TrainConfig(dimension=2, samples=100))
    with pytest.raises(ValueError):
        table.vectors[0, 0] = 1.0


def test_zero_weight_edge_type_rejected():
    hin = build_hin(
        [("a", "A"), ("p", "P")],
        [("write", "A", "P", False)],
        [("a", "p", "write", 0.0)],
    )
    aspect = full_schema_aspect(derive_schema(build_hin(
        [("a", "A"), ("p", "P")], [("write", "A", "P", False)], [("a", "p", "write", 1.0)],
    )))
    with pytest.raises(TrainingError, match="zero total weight"):
        train_aspect(hin, aspect, TrainConfig(dimension=2, samples=10))


# ---------------------------------------------
# Planted structure
# ---------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_planted_blocks_are_separated(seed):
    """Mean f_u . f_v over L-R pairs is higher inside a block than across blocks."""
    planted = planted_bipartite(nodes_per_block=50, blocks=2, degree=5, seed=seed)
    hin = planted.hin
    table = train_onespace(hin, derive_schema(hin), TrainConfig(dimension=8, samples=1_000_000, seed=seed))
    left = [n for n in hin.node_ids if n.startswith("l")]
    right = [n for n in hin.node_ids if n.startswith("r")]
    scores = table.vectors[[table.row(n) for n in left]] @ table.vectors[[table.row(n) for n in right]].T
    same = np.equal.outer([planted.labels[n] for n in left], [planted.labels[n] for n in right])
    intra, inter = scores[same].mean(), scores[~same].mean()
    assert intra > inter, f"seed {seed}: intra {intra:.3f} vs inter {inter:.3f}"


def test_objective_decreases_during_training(bipartite):
    """The exact objective drops between every pair of checkpoints 10^4 samples apart."""
    hin = bipartite.hin
    aspect = full_schema_aspect(derive_schema(hin))
    trace = []
    train_aspect(
        hin, aspect, TrainConfig(dimension=8, samples=50_000, seed=0),
        monitor=lambda steps, table: trace.append((steps, objective(hin, table, aspect))),
        monitor_every=10_000,
    )
    assert [steps for steps, _ in trace] == [10_000, 20_000, 30_000, 40_000, 50_000]
    values = [value for _, value in trace]
    assert all(later < earlier for earlier, later in zip(values, values[1:])), f"Objective trace {trace}"

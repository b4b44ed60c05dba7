# aspem/operations/holdout.py
"""
Link-prediction task construction and task files.

Test queries are removed from the graph the embeddings are trained on; each
query keeps a fixed, seeded candidate set (its true neighbours plus uniform
negatives among non-linked nodes of the candidate type) that every compared
method ranks.

Instance file::

    <query_id>\\t<candidate_id>\\t<label 0|1>

Attribute file::

    <query_id>\\t<edge_type>\\t<attr_id>

Labels file (classification)::

    <node_id>\\t<class>
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from aspem.core.config import settings
from aspem.core.errors import EvaluationError, GraphError, ParseError
from aspem.models.hin import HIN
from aspem.operations.evaluation import LinkPredInstance
from aspem.operations.graph import read_records

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class HoldoutTask:
    train_graph: HIN
    train: List[LinkPredInstance]
    test: List[LinkPredInstance]


def remove_nodes(hin: HIN, node_ids: Sequence[str]) -> HIN:
    """The HIN without ``node_ids`` and their incident edges."""
    keep = np.ones(hin.num_nodes, dtype=bool)
    for node_id in node_ids:
        keep[hin.node_index(node_id)] = False
    index = np.flatnonzero(keep)
    return HIN(
        node_ids=[hin.node_ids[i] for i in index],
        node_type_of=hin.node_type_array[index],
        node_types=hin.node_types,
        edge_types=hin.edge_types,
        decls=hin.decls,
        adjacency=[hin.adjacency(r)[index][:, index] for r in range(len(hin.decls))],
    )


def _neighbours(hin: HIN, node: int, r: int) -> np.ndarray:
    matrix = hin.adjacency(r)
    return matrix.indices[matrix.indptr[node]:matrix.indptr[node + 1]]


def sample_linkpred_instances(
    hin: HIN,
    queries: Sequence[str],
    target_edge_type: str,
    attribute_edge_types: Sequence[str],
    num_candidates: Optional[int] = None,
    seed: int = 0,
) -> List[LinkPredInstance]:
    """
    One instance per query that has at least one ``target_edge_type`` neighbour.

    Candidates are the true neighbours plus uniform negatives of the same node
    type, up to ``num_candidates`` (default ``settings.DEFAULT_CANDIDATES``).
    """
    num_candidates = settings.DEFAULT_CANDIDATES if num_candidates is None else num_candidates
    if num_candidates < 1:
        raise EvaluationError(f"num_candidates must be positive, got {num_candidates}")
    if target_edge_type in attribute_edge_types:
        raise EvaluationError(f"Target edge type {target_edge_type} cannot also be an attribute type")
    r = hin.edge_types.id_of(target_edge_type)
    attribute_ids = [(name, hin.edge_types.id_of(name)) for name in attribute_edge_types]
    rng = np.random.default_rng(seed)

    instances = []
    for query in queries:
        q = hin.node_index(query)
        decl = hin.decl(r)
        if not decl.touches(hin.type_of(q)):
            raise GraphError(f"Edge type {target_edge_type} does not touch the type of query {query}")
        candidate_type = decl.other_end(hin.type_of(q))
        true = np.unique(_neighbours(hin, q, r))
        if true.size == 0:
            logger.debug(f"Query {query} has no {target_edge_type} neighbours; skipped")
            continue
        pool = np.setdiff1d(hin.nodes_of_type(candidate_type), true, assume_unique=True)
        pool = pool[pool != q]
        wanted = min(max(0, num_candidates - true.size), pool.size)
        negatives = rng.choice(pool, size=wanted, replace=False) if wanted else np.empty(0, dtype=np.int64)
        members = sorted([(hin.node_ids[n], 1) for n in true] + [(hin.node_ids[n], 0) for n in negatives])
        attributes = {
            name: tuple(hin.node_ids[n] for n in np.unique(_neighbours(hin, q, rid)))
            for name, rid in attribute_ids
        }
        instances.append(LinkPredInstance(
            query=query,
            candidates=tuple(m[0] for m in members),
            labels=tuple(m[1] for m in members),
            attributes=attributes,
        ))
    return instances


def holdout_queries(
    hin: HIN,
    query_type: str,
    target_edge_type: str,
    attribute_edge_types: Sequence[str],
    test_fraction: float = 0.2,
    train_queries: int = 1000,
    num_candidates: Optional[int] = None,
    seed: int = 0,
) -> HoldoutTask:
    """
    Split query nodes into test and train queries, drop the test queries from
    the training graph, and build instances for both splits.
    """
    if not 0 < test_fraction < 1:
        raise EvaluationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    r = hin.edge_types.id_of(target_edge_type)
    members = hin.nodes_of_type(hin.node_types.id_of(query_type))
    linked = [hin.node_ids[n] for n in members if _neighbours(hin, n, r).size > 0]
    if len(linked) < 2:
        raise EvaluationError(f"Need at least two {query_type} nodes with {target_edge_type} edges")

    rng = np.random.default_rng(seed)
    order = [linked[i] for i in rng.permutation(len(linked))]
    n_test = min(len(order) - 1, max(1, round(len(order) * test_fraction)))
    test_queries = order[:n_test]
    train_pool = order[n_test:]
    train_queries = train_pool[:train_queries]

    test = sample_linkpred_instances(hin, test_queries, target_edge_type, attribute_edge_types, num_candidates, seed + 1)
    train = sample_linkpred_instances(hin, train_queries, target_edge_type, attribute_edge_types, num_candidates, seed + 2)
    graph = remove_nodes(hin, test_queries)
    logger.info(f"Held out {len(test)} test queries, {len(train)} training queries; training graph {graph}")
    return HoldoutTask(train_graph=graph, train=train, test=test)


# -- task files ------------------------------------------------------------

def write_instances(instances: Sequence[LinkPredInstance], instance_file: PathLike) -> None:
    with open(instance_file, "w", encoding="utf-8") as handle:
        for instance in instances:
            for candidate, label in zip(instance.candidates, instance.labels):
                handle.write(f"{instance.query}\t{candidate}\t{label}\n")


def write_attributes(instances: Sequence[LinkPredInstance], attribute_file: PathLike) -> None:
    with open(attribute_file, "w", encoding="utf-8") as handle:
        for instance in instances:
            for edge_type, nodes in instance.attributes.items():
                for node in nodes:
                    handle.write(f"{instance.query}\t{edge_type}\t{node}\n")


def read_instances(instance_file: PathLike, attribute_file: PathLike) -> List[LinkPredInstance]:
    """
    Instances in order of first appearance of each query in the instance file.

    The attribute file may be shared between splits; rows for queries absent
    from the instance file are skipped.
    """
    instance_path, attribute_path = Path(instance_file), Path(attribute_file)
    rows: "OrderedDict[str, List[Tuple[str, int]]]" = OrderedDict()
    for number, line in read_records(instance_path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError("Expected '<query_id>\\t<candidate_id>\\t<label>'", path=instance_path, line=number)
        if parts[2] not in ("0", "1"):
            raise ParseError(f"Label must be 0 or 1, got '{parts[2]}'", path=instance_path, line=number, field="label")
        rows.setdefault(parts[0], []).append((parts[1], int(parts[2])))

    attributes: Dict[str, Dict[str, List[str]]] = {}
    for number, line in read_records(attribute_path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError("Expected '<query_id>\\t<edge_type>\\t<attr_id>'", path=attribute_path, line=number)
        query, edge_type, node = parts
        if query not in rows:
            continue
        attributes.setdefault(query, {}).setdefault(edge_type, []).append(node)

    instances = []
    for query, members in rows.items():
        try:
            instances.append(LinkPredInstance(
                query=query,
                candidates=tuple(m[0] for m in members),
                labels=tuple(m[1] for m in members),
                attributes={k: tuple(v) for k, v in attributes.get(query, {}).items()},
            ))
        except EvaluationError as exc:
            raise ParseError(str(exc), path=instance_path) from None
    return instances


def write_labels(labels: Mapping[str, str], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for node, label in labels.items():
            handle.write(f"{node}\t{label}\n")


def read_labels(path: PathLike) -> Dict[str, str]:
    path = Path(path)
    labels: Dict[str, str] = {}
    for number, line in read_records(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("Expected '<node_id>\\t<class>'", path=path, line=number)
        if parts[0] in labels:
            raise ParseError(f"Duplicate label for '{parts[0]}'", path=path, line=number, field="node_id")
        labels[parts[0]] = parts[1]
    return labels

# aspem/operations/synthetic.py
"""Seeded generators of small HINs with planted structure."""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from aspem.core.errors import GraphError
from aspem.models.hin import HIN
from aspem.operations.graph import GraphBuilder


@dataclass
class PlantedHIN:
    hin: HIN
    labels: Dict[str, str]


def planted_bipartite(
    nodes_per_block: int = 50,
    blocks: int = 2,
    degree: int = 5,
    seed: int = 0,
) -> PlantedHIN:
    """
    Bipartite L-R graph whose edges only join nodes of the same block.

    Every L node links to ``degree`` distinct R nodes of its block; labels map
    each node to its block.
    """
    if degree > nodes_per_block:
        raise GraphError(f"degree {degree} exceeds block size {nodes_per_block}")
    rng = np.random.default_rng(seed)
    builder = GraphBuilder()
    labels: Dict[str, str] = {}
    for b in range(blocks):
        for i in range(nodes_per_block):
            for side in ("L", "R"):
                node_id = f"{side.lower()}{b}_{i}"
                builder.add_node(node_id, side)
                labels[node_id] = str(b)
    builder.declare_edge_type("link", "L", "R", directed=False)
    for b in range(blocks):
        for i in range(nodes_per_block):
            for j in rng.choice(nodes_per_block, size=degree, replace=False):
                builder.add_edge(f"l{b}_{i}", f"r{b}_{j}", "link", 1.0)
    return PlantedHIN(hin=builder.build(), labels=labels)


def planted_two_aspect(
    anchors: int = 200,
    items_per_anchor: int = 5,
    clusters: int = 4,
    attributes_per_cluster: int = 20,
    affinity: float = 0.5,
    catalogue: Optional[int] = None,
    seed: int = 0,
) -> PlantedHIN:
    """
    HIN over types A (anchors), P (items), X and Y (attributes) with edge
    types write (A-P), hasx (P-X) and hasy (P-Y), all undirected.

    Each anchor draws an X cluster and a Y cluster independently and a
    favourite attribute inside each. Its items take the favourite with
    probability ``affinity`` and a uniform member of the cluster otherwise.

    ``catalogue`` further items (default: twice the anchored items) have no
    author. Each belongs to one cluster c and takes a uniform attribute from
    X cluster c and one from Y cluster c. Across the whole item population X
    cluster c therefore co-occurs with Y cluster c, while a single anchor's
    items pair its own, unrelated, X and Y clusters: the X-induced and
    Y-induced groupings of P disagree.

    Labels give each anchor's ``"<x cluster>-<y cluster>"``.
    """
    if not 0 <= affinity <= 1:
        raise GraphError(f"affinity must be in [0, 1], got {affinity}")
    catalogue = 2 * anchors * items_per_anchor if catalogue is None else catalogue
    if catalogue < 0:
        raise GraphError(f"catalogue must be nonnegative, got {catalogue}")
    rng = np.random.default_rng(seed)
    labels: Dict[str, str] = {}
    profiles = []
    for a in range(anchors):
        cx, cy = (int(c) for c in rng.integers(clusters, size=2))
        fx, fy = (int(f) for f in rng.integers(attributes_per_cluster, size=2))
        labels[f"a{a}"] = f"{cx}-{cy}"
        profiles.append((cx, cy, fx, fy))

    def pick(favourite: int) -> int:
        return favourite if rng.random() < affinity else int(rng.integers(attributes_per_cluster))

    edges = []
    for a, (cx, cy, fx, fy) in enumerate(profiles):
        for k in range(items_per_anchor):
            item_id = f"p{a * items_per_anchor + k}"
            edges += [
                (f"a{a}", item_id, "write"),
                (item_id, f"x{cx}_{pick(fx)}", "hasx"),
                (item_id, f"y{cy}_{pick(fy)}", "hasy"),
            ]
    for n in range(catalogue):
        c = int(rng.integers(clusters))
        x, y = (int(i) for i in rng.integers(attributes_per_cluster, size=2))
        edges += [(f"c{n}", f"x{c}_{x}", "hasx"), (f"c{n}", f"y{c}_{y}", "hasy")]

    builder = GraphBuilder()
    for a in range(anchors):
        builder.add_node(f"a{a}", "A")
    for p in range(anchors * items_per_anchor):
        builder.add_node(f"p{p}", "P")
    for n in range(catalogue):
        builder.add_node(f"c{n}", "P")
    for kind in ("x", "y"):
        for c in range(clusters):
            for i in range(attributes_per_cluster):
                builder.add_node(f"{kind}{c}_{i}", kind.upper())
    builder.declare_edge_type("write", "A", "P", directed=False)
    builder.declare_edge_type("hasx", "P", "X", directed=False)
    builder.declare_edge_type("hasy", "P", "Y", directed=False)
    for source, target, edge_type in edges:
        builder.add_edge(source, target, edge_type, 1.0)
    return PlantedHIN(hin=builder.build(), labels=labels)

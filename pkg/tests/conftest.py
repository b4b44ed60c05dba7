# tests/conftest.py

"""
Shared fixtures: paths to the shipped score tables, small hand-built graphs
and helpers that write them to disk in the ingest formats.
"""

from pathlib import Path
from typing import Iterable, Tuple

import numpy as np
import pytest

from aspem.models.hin import HIN
from aspem.operations.graph import build_hin, derive_schema, write_hin
from aspem.operations.incompatibility import read_score_table

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


# ---------------------------------------------
# Score table fixtures
# ---------------------------------------------

@pytest.fixture(scope="session")
def dblp_scores_path() -> Path:
    return FIXTURES / "dblp_scores.tsv"


@pytest.fixture(scope="session")
def imdb_scores_path() -> Path:
    return FIXTURES / "imdb_scores.tsv"


@pytest.fixture(scope="session")
def dblp_scores(dblp_scores_path):
    return read_score_table(dblp_scores_path)


@pytest.fixture(scope="session")
def imdb_scores(imdb_scores_path):
    return read_score_table(imdb_scores_path)


# ---------------------------------------------
# Small graphs
# ---------------------------------------------

def random_star_hin(seed: int, edge_types: int = 3, max_nodes: int = 12, density: float = 0.3) -> HIN:
    """
    Random weighted HIN whose edge types all join center type C to leaf types
    L0, L1, ...; a mix of directed and undirected edge types.
    """
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, max_nodes + 1, size=edge_types + 1)
    nodes = [(f"c{i}", "C") for i in range(sizes[0])]
    declarations, edges = [], []
    for k in range(edge_types):
        nodes += [(f"l{k}_{i}", f"L{k}") for i in range(sizes[k + 1])]
        directed = bool(rng.integers(2))
        # directed edge types point either out of or into the center
        outward = bool(rng.integers(2))
        source, target = ("C", f"L{k}") if outward or not directed else (f"L{k}", "C")
        declarations.append((f"e{k}", source, target, directed))
        for i in range(sizes[0]):
            for j in range(sizes[k + 1]):
                if rng.random() < density:
                    weight = float(rng.integers(1, 5))
                    pair = (f"c{i}", f"l{k}_{j}") if source == "C" else (f"l{k}_{j}", f"c{i}")
                    edges.append((pair[0], pair[1], f"e{k}", weight))
    return build_hin(nodes, declarations, edges)


def write_graph(hin: HIN, directory: Path) -> Tuple[Path, Path]:
    directory.mkdir(parents=True, exist_ok=True)
    node_file, edge_file = directory / "nodes.tsv", directory / "edges.tsv"
    write_hin(hin, node_file, edge_file)
    return node_file, edge_file


def write_lines(path: Path, lines: Iterable[str]) -> Path:
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


@pytest.fixture
def toy_hin() -> HIN:
    """
    Six-node graph: authors a1, a2 write papers p1, p2; papers appear in
    venues v1, v2. Both edge types undirected.
    """
    return build_hin(
        nodes=[("a1", "A"), ("a2", "A"), ("p1", "P"), ("p2", "P"), ("v1", "V"), ("v2", "V")],
        edge_types=[("write", "A", "P", False), ("publish", "P", "V", False)],
        edges=[
            ("a1", "p1", "write", 1.0),
            ("a1", "p2", "write", 2.0),
            ("a2", "p2", "write", 1.0),
            ("p1", "v1", "publish", 1.0),
            ("p2", "v2", "publish", 3.0),
        ],
    )


@pytest.fixture
def toy_schema(toy_hin):
    return derive_schema(toy_hin)


@pytest.fixture
def graph_files(tmp_path, toy_hin):
    return write_graph(toy_hin, tmp_path / "graph")

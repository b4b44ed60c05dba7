# aspem/operations/training.py
"""
Per-aspect embedding by edge-sampled skip-gram with negative sampling.

Each iteration draws an edge type uniformly from the aspect, an edge of that
type with probability proportional to its weight, and K negatives from the
in-degree^0.75 noise distribution over the edge's target node type, then
ascends

    log s(f_u . f_v) + sum_i log s(-f_u . f_{v_i})

where s is the logistic function. There is one vector per node and aspect;
the same table serves both ends of an edge.

Workers update the shared matrix without locks (races on vector entries are
tolerated); one worker runs in the calling thread and is bit-reproducible
for a fixed seed. The sampling loop is compiled with numba and releases the
GIL, so worker threads run in parallel.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numba import njit
from scipy.special import log_softmax, rel_entr, softmax

from aspem.core.errors import GraphError, TrainingError
from aspem.models.aspect import Aspect, full_schema_aspect
from aspem.models.embedding import EmbeddingTable
from aspem.models.hin import HIN, SchemaGraph
from aspem.operations.alias import AliasTable, build_alias_table
from aspem.schemas.config import TrainConfig

logger = logging.getLogger(__name__)

EdgeTypeRef = Union[int, str]

MIN_LR_FRACTION = 1e-4


def _edge_type_id(hin: HIN, r: EdgeTypeRef) -> int:
    if isinstance(r, str):
        return hin.edge_types.id_of(r)
    if not 0 <= r < len(hin.decls):
        raise GraphError(f"Unknown edge type id: {r}")
    return int(r)


# -- noise distribution ----------------------------------------------------

@dataclass(frozen=True)
class NoiseSampler:
    """
    Negative-sampling distributions keyed by (edge type, target node type).

    An undirected edge type between two distinct node types is sampled in
    both directions, so it has one distribution per endpoint type.
    """
    hin: HIN
    power: float
    nodes: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    tables: Dict[Tuple[int, int], AliasTable] = field(default_factory=dict)

    def distribution(self, r: int, target_type: int) -> Tuple[np.ndarray, np.ndarray]:
        """(internal node ids, probabilities) of one noise distribution."""
        key = self._key(r, target_type)
        return self.nodes[key], self.tables[key].probabilities()

    def draw(self, r: int, target_type: int, rng: np.random.Generator, size: int) -> np.ndarray:
        key = self._key(r, target_type)
        return self.nodes[key][self.tables[key].sample_many(rng, size)]

    def _key(self, r: int, target_type: int) -> Tuple[int, int]:
        key = (r, target_type)
        if key not in self.tables:
            decl = self.hin.decl(r)
            raise TrainingError(
                f"Edge type {decl.name} has no {self.hin.node_types.name_of(target_type)} node "
                f"with positive in-degree"
            )
        return key


def build_noise_sampler(hin: HIN, edge_types: Iterable[EdgeTypeRef], power: float = 0.75) -> NoiseSampler:
    """Alias tables over ``in_degree ** power`` for every target side of ``edge_types``."""
    sampler = NoiseSampler(hin=hin, power=power)
    for ref in edge_types:
        r = _edge_type_id(hin, ref)
        decl = hin.decl(r)
        in_degree = hin.in_degree(r)
        targets = {decl.target} if decl.directed else set(decl.endpoints())
        for t in sorted(targets):
            members = hin.nodes_of_type(t)
            degree = in_degree[members]
            support = degree > 0
            if not support.any():
                continue
            sampler.nodes[(r, t)] = members[support]
            sampler.tables[(r, t)] = build_alias_table(np.power(degree[support], power))
    return sampler


def noise_sample(
    sampler: NoiseSampler,
    r: EdgeTypeRef,
    rng: np.random.Generator,
    target_type: Optional[Union[int, str]] = None,
) -> str:
    """
    Draw one negative node for edge type ``r``.

    ``target_type`` defaults to the declared target of ``r``; pass the other
    endpoint type to sample the reverse direction of an undirected edge type.

    Raises:
        TrainingError: if no node of the target type has positive in-degree
    """
    hin = sampler.hin
    r = _edge_type_id(hin, r)
    if target_type is None:
        target_type = hin.decl(r).target
    elif isinstance(target_type, str):
        target_type = hin.node_types.id_of(target_type)
    node = sampler.draw(r, target_type, rng, 1)[0]
    return hin.node_ids[node]


# -- compiled kernels ------------------------------------------------------

@njit(nogil=True, cache=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@njit(nogil=True, cache=True)
def _dot(emb, a, b):
    s = 0.0
    for j in range(emb.shape[1]):
        s += emb[a, j] * emb[b, j]
    return s


@njit(nogil=True, cache=True)
def _sgns_update(emb, u, v, negs, lr, grad_u, grad_v, grad_neg):
    # gradients from the current values first, then additive writes by index
    d = emb.shape[1]
    g = 1.0 - _sigmoid(_dot(emb, u, v))
    for j in range(d):
        grad_u[j] = g * emb[v, j]
        grad_v[j] = g * emb[u, j]
    for i in range(negs.shape[0]):
        n = negs[i]
        s = _sigmoid(_dot(emb, u, n))
        for j in range(d):
            grad_u[j] -= s * emb[n, j]
            grad_neg[i, j] = -s * emb[u, j]
    for j in range(d):
        emb[u, j] += lr * grad_u[j]
        emb[v, j] += lr * grad_v[j]
    for i in range(negs.shape[0]):
        n = negs[i]
        for j in range(d):
            emb[n, j] += lr * grad_neg[i, j]


@njit(nogil=True, cache=True)
def _alias_draw(lo, hi, prob, alias):
    slot = lo + np.random.randint(0, hi - lo)
    if np.random.random() < prob[slot]:
        return slot
    return lo + alias[slot]


@njit(nogil=True, cache=True)
def _draw_segment(lo, hi, prob, alias, size, seed):
    np.random.seed(seed)
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = _alias_draw(lo, hi, prob, alias)
    return out


@njit(nogil=True, cache=True)
def _train_kernel(emb, type_offsets, edge_src, edge_dst, edge_prob, edge_alias, edge_noise,
                  noise_offsets, noise_nodes, noise_prob, noise_alias,
                  negatives, start, count, total, lr0, min_fraction, seed):
    if seed >= 0:
        np.random.seed(seed)
    d = emb.shape[1]
    grad_u = np.empty(d)
    grad_v = np.empty(d)
    grad_neg = np.empty((negatives, d))
    negs = np.empty(negatives, dtype=np.int64)
    n_types = type_offsets.shape[0] - 1
    for step in range(start, start + count):
        lr = lr0 * max(1.0 - step / total, min_fraction)
        r = np.random.randint(0, n_types)
        e = _alias_draw(type_offsets[r], type_offsets[r + 1], edge_prob, edge_alias)
        q = edge_noise[e]
        for i in range(negatives):
            negs[i] = noise_nodes[_alias_draw(noise_offsets[q], noise_offsets[q + 1], noise_prob, noise_alias)]
        _sgns_update(emb, edge_src[e], edge_dst[e], negs, lr, grad_u, grad_v, grad_neg)


# -- single-step API -------------------------------------------------------

def sgns_objective(f_u: np.ndarray, f_v: np.ndarray, f_negs: np.ndarray) -> float:
    """Per-edge negative-sampling objective for explicit vectors."""
    f_negs = np.asarray(f_negs, dtype=np.float64).reshape(-1, len(f_u))
    value = -np.logaddexp(0.0, -np.dot(f_u, f_v))
    value -= np.logaddexp(0.0, f_negs @ f_u).sum()
    return float(value)


def sgns_gradients(
    f_u: np.ndarray, f_v: np.ndarray, f_negs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of ``sgns_objective`` with respect to f_u, f_v and each negative."""
    f_u = np.asarray(f_u, dtype=np.float64)
    f_v = np.asarray(f_v, dtype=np.float64)
    f_negs = np.asarray(f_negs, dtype=np.float64).reshape(-1, len(f_u))
    g = 1.0 - _sigmoid(float(np.dot(f_u, f_v)))
    s = np.array([_sigmoid(float(x)) for x in f_negs @ f_u])
    grad_u = g * f_v - s @ f_negs
    grad_v = g * f_u
    grad_negs = -np.outer(s, f_u)
    return grad_u, grad_v, grad_negs


def sgns_step(
    table: EmbeddingTable,
    edge: Tuple[str, str, EdgeTypeRef],
    noise: NoiseSampler,
    negatives: int,
    lr: float,
    rng: np.random.Generator,
    fixed_negatives: Optional[Sequence[str]] = None,
) -> EmbeddingTable:
    """
    Apply one SGD ascent step for edge ``(u, v, r)`` in place.

    Negatives are drawn from ``noise`` for the target type of ``v`` unless
    ``fixed_negatives`` gives them (then ``negatives`` is ignored).
    """
    u, v, r = edge
    hin = noise.hin
    r = _edge_type_id(hin, r)
    if fixed_negatives is None:
        target_type = hin.type_of(hin.node_index(v))
        drawn = noise.draw(r, target_type, rng, negatives) if negatives else np.empty(0, dtype=np.int64)
        fixed_negatives = [hin.node_ids[n] for n in drawn]
    neg_rows = np.array([table.row(n) for n in fixed_negatives], dtype=np.int64)
    d = table.dimension
    _sgns_update(
        table.vectors, table.row(u), table.row(v), neg_rows, float(lr),
        np.empty(d), np.empty(d), np.empty((len(neg_rows), d)),
    )
    return table


# -- exact objective diagnostics -------------------------------------------

def softmax_prob(table: EmbeddingTable, u: str, v: str, candidates: Sequence[str]) -> float:
    """
    Probability of ``v`` given ``u`` under the softmax restricted to ``candidates``.

    Raises:
        TrainingError: if ``candidates`` is empty or does not contain ``v``
    """
    candidates = list(candidates)
    if v not in candidates:
        raise TrainingError(f"Node '{v}' is not among the softmax candidates")
    rows = [table.row(c) for c in candidates]
    scores = table.vectors[rows] @ table.vector(u)
    return float(softmax(scores)[candidates.index(v)])


def empirical_prob(hin: HIN, u: str, v: str, r: EdgeTypeRef) -> float:
    """
    ``W_uv / D_u`` for edge type ``r``.

    Raises:
        GraphError: if ``u`` has no outgoing edge of type ``r``
    """
    r = _edge_type_id(hin, r)
    iu, iv = hin.node_index(u), hin.node_index(v)
    degree = hin.out_degree(r)[iu]
    if degree <= 0:
        raise GraphError(f"Node '{u}' has no outgoing {hin.decl(r).name} edge")
    return hin.weight(iu, iv, r) / degree


def _table_rows(hin: HIN, table: EmbeddingTable, nodes: np.ndarray) -> np.ndarray:
    return np.array([table.row(hin.node_ids[n]) for n in nodes], dtype=np.int64)


def _aspect_edge_types(hin: HIN, a: Aspect) -> List[int]:
    if not a.edge_types:
        raise TrainingError(f"Aspect {a.name} has no edge types")
    edge_types = sorted(a.edge_types)
    for r in edge_types:
        if hin.total_weight(r) <= 0:
            raise TrainingError(f"Edge type {hin.decl(r).name} of aspect {a.name} has zero total weight")
    return edge_types


def _edge_groups(hin: HIN, r: int):
    """Edges of type r grouped by the node type of their targets."""
    src, dst, w = hin.edges(r)
    dst_types = hin.node_type_array[dst]
    for t in np.unique(dst_types):
        mask = dst_types == t
        yield src[mask], dst[mask], w[mask], hin.nodes_of_type(int(t))


def objective(hin: HIN, table: EmbeddingTable, a: Aspect) -> float:
    """
    Exact weighted negative log-likelihood of the aspect's edges under the
    type-restricted softmax. Dense in the candidate sets; for small graphs.
    """
    total = 0.0
    for r in _aspect_edge_types(hin, a):
        omega = hin.total_weight(r)
        for src, dst, w, candidates in _edge_groups(hin, r):
            vectors = table.vectors
            scores = vectors[_table_rows(hin, table, src)] @ vectors[_table_rows(hin, table, candidates)].T
            log_p = log_softmax(scores, axis=1)[np.arange(len(dst)), np.searchsorted(candidates, dst)]
            total -= math.fsum(w * log_p) / omega
    return total


def kl_objective(hin: HIN, table: EmbeddingTable, a: Aspect) -> float:
    """Out-degree weighted KL divergence from empirical to model conditionals."""
    total = 0.0
    for r in _aspect_edge_types(hin, a):
        omega = hin.total_weight(r)
        matrix = hin.adjacency(r)
        out_degree = hin.out_degree(r)
        for u in np.flatnonzero(out_degree > 0):
            candidates = hin.nodes_of_type(hin.decl(r).other_end(hin.type_of(int(u))))
            start, end = matrix.indptr[u], matrix.indptr[u + 1]
            empirical = np.zeros(len(candidates))
            empirical[np.searchsorted(candidates, matrix.indices[start:end])] = matrix.data[start:end] / out_degree[u]
            scores = table.vectors[_table_rows(hin, table, candidates)] @ table.vector(hin.node_ids[u])
            kl = math.fsum(rel_entr(empirical, softmax(scores)))
            total += out_degree[u] / omega * kl
    return total


def conditional_entropy(hin: HIN, a: Aspect) -> float:
    """Weighted entropy of the empirical conditionals; independent of any embedding."""
    total = 0.0
    for r in _aspect_edge_types(hin, a):
        src, _, w = hin.edges(r)
        p = w / hin.out_degree(r)[src]
        total -= math.fsum(w * np.log(p)) / hin.total_weight(r)
    return total


# -- training --------------------------------------------------------------

@dataclass
class _SamplingPlan:
    type_offsets: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_prob: np.ndarray
    edge_alias: np.ndarray
    edge_noise: np.ndarray
    noise_offsets: np.ndarray
    noise_nodes: np.ndarray
    noise_prob: np.ndarray
    noise_alias: np.ndarray

    def arrays(self) -> tuple:
        return (self.type_offsets, self.edge_src, self.edge_dst, self.edge_prob, self.edge_alias,
                self.edge_noise, self.noise_offsets, self.noise_nodes, self.noise_prob, self.noise_alias)

    def draw_noise(self, segment: int, size: int, seed: int) -> np.ndarray:
        """Table rows drawn by the kernel's sampler from one noise segment."""
        lo, hi = int(self.noise_offsets[segment]), int(self.noise_offsets[segment + 1])
        return self.noise_nodes[_draw_segment(lo, hi, self.noise_prob, self.noise_alias, size, seed)]


def _aspect_rows(hin: HIN, a: Aspect) -> Tuple[np.ndarray, np.ndarray]:
    """Internal ids of the aspect's nodes in table order, and the table row of every node (-1 outside)."""
    nodes = np.concatenate([hin.nodes_of_type(t) for t in sorted(a.node_types)])
    rows = np.full(hin.num_nodes, -1, dtype=np.int64)
    rows[nodes] = np.arange(len(nodes))
    return nodes, rows


def _sampling_plan(hin: HIN, edge_types: List[int], rows: np.ndarray, noise: NoiseSampler) -> _SamplingPlan:
    """Flatten per-type edge and noise alias tables into segments for the kernel."""
    noise_keys = sorted(noise.tables)
    noise_index = {key: i for i, key in enumerate(noise_keys)}
    noise_offsets = np.cumsum([0] + [len(noise.tables[k]) for k in noise_keys]).astype(np.int64)

    type_offsets = [0]
    src_parts, dst_parts, prob_parts, alias_parts, noise_parts = [], [], [], [], []
    for r in edge_types:
        src, dst, w = hin.edges(r)
        table = build_alias_table(w)
        src_parts.append(rows[src])
        dst_parts.append(rows[dst])
        prob_parts.append(table.prob)
        alias_parts.append(table.alias)
        dst_types = hin.node_type_array[dst]
        noise_parts.append(np.array([noise_index[(r, int(t))] for t in dst_types], dtype=np.int64))
        type_offsets.append(type_offsets[-1] + len(w))

    return _SamplingPlan(
        type_offsets=np.asarray(type_offsets, dtype=np.int64),
        edge_src=np.concatenate(src_parts).astype(np.int64),
        edge_dst=np.concatenate(dst_parts).astype(np.int64),
        edge_prob=np.concatenate(prob_parts).astype(np.float64),
        edge_alias=np.concatenate(alias_parts).astype(np.int64),
        edge_noise=np.concatenate(noise_parts),
        noise_offsets=noise_offsets,
        noise_nodes=np.concatenate([rows[noise.nodes[k]] for k in noise_keys]).astype(np.int64),
        noise_prob=np.concatenate([noise.tables[k].prob for k in noise_keys]).astype(np.float64),
        noise_alias=np.concatenate([noise.tables[k].alias for k in noise_keys]).astype(np.int64),
    )


def _chunks(count: int, size: int) -> List[Tuple[int, int]]:
    return [(start, min(size, count - start)) for start in range(0, count, size)]


def train_aspect(
    hin: HIN,
    a: Aspect,
    cfg: TrainConfig,
    monitor: Optional[Callable[[int, EmbeddingTable], None]] = None,
    monitor_every: int = 10_000,
) -> EmbeddingTable:
    """
    Train one embedding table over every node whose type is in ``a``.

    Nodes without edges in the aspect keep their initial vectors. With
    ``monitor`` set, training runs single-threaded and the callback receives
    (steps done, live table) every ``monitor_every`` samples.

    Raises:
        TrainingError: if an edge type of the aspect has zero total weight
    """
    edge_types = _aspect_edge_types(hin, a)
    nodes, rows = _aspect_rows(hin, a)

    d = cfg.dimension
    rng = np.random.default_rng(cfg.seed)
    vectors = rng.uniform(-0.5 / d, 0.5 / d, size=(len(nodes), d))
    table = EmbeddingTable(a.name, [hin.node_ids[n] for n in nodes], vectors)

    noise = build_noise_sampler(hin, edge_types, cfg.noise_power)
    plan = _sampling_plan(hin, edge_types, rows, noise).arrays()
    workers = 1 if monitor is not None else cfg.workers
    seeds = [int(s) for s in np.random.SeedSequence(cfg.seed).generate_state(workers)]
    counts = [cfg.samples // workers + (w < cfg.samples % workers) for w in range(workers)]

    logger.info(
        f"Training aspect {a.name}: {len(nodes)} nodes, d={d}, K={cfg.negatives}, "
        f"S={cfg.samples}, workers={workers}"
    )

    def run(worker: int) -> None:
        count = counts[worker]
        step = monitor_every if monitor is not None else max(1, math.ceil(count / 10))
        for i, (start, size) in enumerate(_chunks(count, step)):
            _train_kernel(
                table.vectors, *plan, cfg.negatives, start, size, count,
                cfg.learning_rate, MIN_LR_FRACTION, seeds[worker] if i == 0 else -1,
            )
            if monitor is not None:
                monitor(start + size, table)
            if worker == 0:
                logger.debug(f"{a.name}: worker 0 at {100 * (start + size) / count:.0f}%")

    if workers == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(run, w) for w in range(workers)]:
                future.result()

    if not table.is_finite():
        raise TrainingError(f"Training aspect {a.name} produced non-finite vectors")
    return table.freeze()


def train_onespace(hin: HIN, schema: SchemaGraph, cfg: TrainConfig) -> EmbeddingTable:
    """Train a single space over the full schema."""
    return train_aspect(hin, full_schema_aspect(schema), cfg)

# aspem/operations/evaluation.py
"""
Link-prediction and classification harnesses.

A link-prediction instance is one query node with a fixed candidate set
(true neighbours plus sampled negatives) and the query's attribute nodes
grouped by edge type. The feature vector of a (query, candidate) pair is,
for each declared (edge type, attribute type) slot, the mean edge embedding
between the candidate and the query's attributes of that type; the slot
blocks are concatenated in declared order.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.multiclass import OneVsRestClassifier

from aspem.core.errors import BundleError, EvaluationError
from aspem.models.embedding import AspectBundle
from aspem.operations.compose import edge_embedding, node_embedding
from aspem.operations.logreg import predict_score, train_logreg
from aspem.schemas.evaluation import ClassificationReport, LinkPredReport

logger = logging.getLogger(__name__)

DEFAULT_KS = (1, 3, 10)


@dataclass(frozen=True)
class LinkPredInstance:
    """One query with its candidate set and attributes."""
    query: str
    candidates: Tuple[str, ...]
    labels: Tuple[int, ...]
    attributes: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.candidates:
            raise EvaluationError(f"Query {self.query} has no candidates")
        if len(self.candidates) != len(self.labels):
            raise EvaluationError(f"Query {self.query}: {len(self.candidates)} candidates, {len(self.labels)} labels")
        if len(set(self.candidates)) != len(self.candidates):
            raise EvaluationError(f"Query {self.query} has duplicate candidates")
        if any(label not in (0, 1) for label in self.labels):
            raise EvaluationError(f"Query {self.query}: labels must be 0 or 1")
        if not any(self.labels):
            raise EvaluationError(f"Query {self.query} has no true candidate")

    @property
    def size(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class FeatureLayout:
    """
    Candidate node type plus the ordered (edge type, attribute node type)
    slots of the pair feature vector.
    """
    anchor_type: str
    slots: Tuple[Tuple[str, str], ...]

    @classmethod
    def for_query_type(
        cls, bundle: AspectBundle, anchor_type: str, query_type: str, edge_types: Iterable[str]
    ) -> "FeatureLayout":
        """Slots whose attribute type is the far end of each edge type from ``query_type``."""
        slots = []
        for edge_type in edge_types:
            endpoints = bundle.edge_endpoints(edge_type)
            if endpoints is None:
                raise EvaluationError(f"Edge type {edge_type} is not in any aspect of the bundle")
            if query_type not in endpoints:
                raise EvaluationError(f"Edge type {edge_type} does not touch query type {query_type}")
            source, target = endpoints
            slots.append((edge_type, target if source == query_type else source))
        return cls(anchor_type=anchor_type, slots=tuple(slots))

    def restrict(self, edge_type: str) -> "FeatureLayout":
        """Layout with the single slot of ``edge_type``."""
        slots = tuple(s for s in self.slots if s[0] == edge_type)
        if not slots:
            raise EvaluationError(f"Edge type {edge_type} is not a slot of the layout")
        return FeatureLayout(self.anchor_type, slots)

    def block_length(self, bundle: AspectBundle, attr_type: str) -> int:
        return sum(e.dimension for e in bundle.aspects_with_types(self.anchor_type, attr_type))

    def length(self, bundle: AspectBundle) -> int:
        return sum(self.block_length(bundle, attr_type) for _, attr_type in self.slots)


def pair_features(
    bundle: AspectBundle,
    anchor: str,
    attrs: Mapping[str, Sequence[str]],
    layout: FeatureLayout,
) -> np.ndarray:
    """
    Concatenated per-slot mean edge embeddings between ``anchor`` and its
    attributes. A slot without attributes contributes a zero block.

    Raises:
        EvaluationError: if a slot's attribute type shares no aspect with
            the anchor type, or an attribute is not covered by those aspects
    """
    blocks = []
    for edge_type, attr_type in layout.slots:
        length = layout.block_length(bundle, attr_type)
        if length == 0:
            raise EvaluationError(f"No aspect contains both {layout.anchor_type} and {attr_type}")
        nodes = attrs.get(edge_type, ())
        if not nodes:
            logger.warning(f"No {edge_type} attributes for pair with {anchor}; using a zero block")
            blocks.append(np.zeros(length))
            continue
        try:
            vectors = [edge_embedding(bundle, anchor, n) for n in nodes]
        except BundleError as exc:
            raise EvaluationError(str(exc)) from None
        block = np.mean(vectors, axis=0)
        if block.shape[0] != length:
            raise EvaluationError(
                f"Edge embedding of {anchor} with {edge_type} attributes has length {block.shape[0]}, expected {length}"
            )
        blocks.append(block)
    return np.concatenate(blocks)


def instance_features(bundle: AspectBundle, instance: LinkPredInstance, layout: FeatureLayout) -> np.ndarray:
    """One feature row per candidate of ``instance``."""
    return np.vstack([pair_features(bundle, c, instance.attributes, layout) for c in instance.candidates])


# -- ranking metrics -------------------------------------------------------

@dataclass(frozen=True)
class RankedResult:
    """Candidates by descending score, ties by ascending id, with their labels."""
    candidates: Tuple[str, ...]
    labels: Tuple[int, ...]

    @property
    def total_true(self) -> int:
        return sum(self.labels)

    def __len__(self) -> int:
        return len(self.candidates)


def rank_candidates(candidates: Sequence[str], scores: Sequence[float], labels: Sequence[int]) -> RankedResult:
    if not len(candidates) == len(scores) == len(labels):
        raise EvaluationError("Candidates, scores and labels must have equal lengths")
    order = sorted(range(len(candidates)), key=lambda i: (-float(scores[i]), candidates[i]))
    return RankedResult(
        candidates=tuple(candidates[i] for i in order),
        labels=tuple(int(labels[i]) for i in order),
    )


def _hits(result: RankedResult, k: int) -> int:
    if not 1 <= k <= len(result):
        raise EvaluationError(f"k must be between 1 and {len(result)}, got {k}")
    return sum(result.labels[:k])


def precision_at_k(result: RankedResult, k: int) -> float:
    return _hits(result, k) / k


def recall_at_k(result: RankedResult, k: int) -> float:
    hits = _hits(result, k)
    if result.total_true == 0:
        raise EvaluationError("Recall is undefined without true candidates")
    return hits / result.total_true


def accuracy(pred: Sequence, truth: Sequence) -> float:
    """
    Fraction of positions where ``pred`` equals ``truth``.

    Example:
    >>> accuracy([1, 2, 3, 4], [1, 2, 3, 0])
    0.75
    """
    if len(pred) != len(truth):
        raise EvaluationError(f"{len(pred)} predictions but {len(truth)} labels")
    if len(truth) == 0:
        raise EvaluationError("Accuracy of an empty prediction set is undefined")
    return sum(1 for p, t in zip(pred, truth) if p == t) / len(truth)


# -- harnesses -------------------------------------------------------------

Scorer = Callable[[LinkPredInstance], Sequence[float]]


def evaluate_rankings(
    instances: Sequence[LinkPredInstance], scorer: Scorer, ks: Sequence[int] = DEFAULT_KS
) -> LinkPredReport:
    """Mean P@k and R@k over ``instances`` ranked by ``scorer``."""
    if not instances:
        raise EvaluationError("No instances to evaluate")
    precision: Dict[int, List[float]] = {k: [] for k in ks}
    recall: Dict[int, List[float]] = {k: [] for k in ks}
    for instance in instances:
        result = rank_candidates(instance.candidates, scorer(instance), instance.labels)
        for k in ks:
            precision[k].append(precision_at_k(result, k))
            recall[k].append(recall_at_k(result, k))
    n = len(instances)
    return LinkPredReport(
        precision={k: math.fsum(v) / n for k, v in precision.items()},
        recall={k: math.fsum(v) / n for k, v in recall.items()},
        queries=n,
    )


def linkpred_harness(
    bundle: Optional[AspectBundle],
    train: Sequence[LinkPredInstance],
    test: Sequence[LinkPredInstance],
    layout: Optional[FeatureLayout] = None,
    scorer: Optional[Scorer] = None,
    ks: Sequence[int] = DEFAULT_KS,
    epochs: int = 1000,
    l2: float = 1.0,
) -> LinkPredReport:
    """
    Train a logistic model on training pair features and rank test candidates.

    ``scorer`` replaces the trained model (bundle and layout are then unused).

    Raises:
        EvaluationError: for an empty split or a query present in both splits
    """
    if not test:
        raise EvaluationError("Empty test split")
    shared = {i.query for i in train} & {i.query for i in test}
    if shared:
        raise EvaluationError(f"Queries present in both splits: {sorted(shared)[:5]}")

    if scorer is None:
        if not train:
            raise EvaluationError("Empty training split")
        if bundle is None or layout is None:
            raise EvaluationError("A bundle and a feature layout are required without an injected scorer")
        X = np.vstack([instance_features(bundle, i, layout) for i in train])
        y = np.concatenate([np.asarray(i.labels) for i in train])
        model = train_logreg(X, y, epochs=epochs, l2=l2)
        logger.info(f"Trained pair scorer on {X.shape[0]} pairs with {X.shape[1]} features")

        def scorer(instance: LinkPredInstance) -> np.ndarray:
            return predict_score(model, instance_features(bundle, instance, layout))

    report = evaluate_rankings(test, scorer, ks)
    logger.info(f"Link prediction over {report.queries} queries: P@k={report.precision} R@k={report.recall}")
    return report


def classification_harness(
    bundle: AspectBundle,
    labels: Mapping[str, str],
    test_fraction: float = 0.2,
    seed: int = 0,
    epochs: int = 1000,
    l2: float = 1.0,
) -> ClassificationReport:
    """
    One-vs-rest logistic regression on node embeddings with a seeded
    train/test split of the labelled nodes.
    """
    if not 0 < test_fraction < 1:
        raise EvaluationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    nodes = sorted(labels)
    if len(nodes) < 2:
        raise EvaluationError("Classification needs at least two labelled nodes")
    try:
        features = np.vstack([node_embedding(bundle, u) for u in nodes])
    except BundleError as exc:
        raise EvaluationError(str(exc)) from None
    except ValueError:
        raise EvaluationError("Labelled nodes have node embeddings of different lengths") from None
    targets = np.array([labels[u] for u in nodes])

    order = np.random.default_rng(seed).permutation(len(nodes))
    n_test = min(len(nodes) - 1, max(1, round(len(nodes) * test_fraction)))
    test_idx, train_idx = order[:n_test], order[n_test:]
    if np.unique(targets[train_idx]).size < 2:
        raise EvaluationError("Training split holds a single class")

    estimator = LogisticRegression(C=1.0 / l2, max_iter=epochs) if l2 > 0 else LogisticRegression(penalty=None, max_iter=epochs)
    model = OneVsRestClassifier(estimator).fit(features[train_idx], targets[train_idx])
    predicted = model.predict(features[test_idx])
    score = accuracy(list(predicted), list(targets[test_idx]))
    logger.info(f"Classification accuracy {score:.4f} on {n_test} test nodes")
    return ClassificationReport(
        accuracy=score,
        train_size=len(train_idx),
        test_size=n_test,
        classes=sorted(set(targets.tolist())),
    )

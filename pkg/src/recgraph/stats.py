"""Topological diagnostics of rating bigraphs.

Second neighbors of a node are the distinct nodes of its own modality at
distance two. For a user those are exactly the "potentially similar" users,
the ones sharing at least one rated item.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import NamedTuple

from recgraph.generator import ITEM, USER, Bigraph, GeneratorParams


class UndefinedInputError(ValueError):
    pass


class Clustering(NamedTuple):
    """BLCC value; ``defined`` is False when the denominator is zero and
    the value is the 0 sentinel."""

    value: float
    defined: bool


def _other(modality):
    return ITEM if modality == USER else USER


def second_neighbors(graph: Bigraph, node: int, modality: str = USER) -> set[int]:
    other = _other(modality)
    reach = set()
    for mid in graph.neighbors(modality, node):
        reach.update(graph.neighbors(other, mid))
    reach.discard(node)
    return reach


def blcc(graph: Bigraph, node: int, modality: str = USER) -> Clustering:
    """Bipartite local clustering coefficient.

    ``1 - |N2(node)| / sum(k_i - 1 for i in N1(node))``.
    """
    other = _other(modality)
    degrees = graph.item_adjacency if other == ITEM else graph.user_adjacency
    potential = sum(len(degrees[i]) - 1 for i in graph.neighbors(modality, node))
    if potential == 0:
        return Clustering(0.0, False)
    return Clustering(1.0 - len(second_neighbors(graph, node, modality)) / potential, True)


def mean_blcc(graph: Bigraph, modality: str = USER) -> float:
    """Mean BLCC over nodes whose coefficient is defined (0.0 if none)."""
    count = graph.n_users if modality == USER else graph.n_items
    values = [c.value for c in (blcc(graph, n, modality) for n in range(count)) if c.defined]
    return sum(values) / len(values) if values else 0.0


@dataclass(frozen=True)
class DegreeDistribution:
    modality: str
    histogram: dict[int, int]

    @property
    def count(self) -> int:
        return sum(self.histogram.values())

    @property
    def mean(self) -> Fraction:
        return Fraction(sum(k * c for k, c in self.histogram.items()), self.count)

    @property
    def second_moment(self) -> Fraction:
        return Fraction(sum(k * k * c for k, c in self.histogram.items()), self.count)

    @property
    def max_degree(self) -> int:
        return max(self.histogram)


def degree_distribution(graph: Bigraph, modality: str = USER) -> DegreeDistribution:
    degrees = graph.user_degrees if modality == USER else graph.item_degrees
    if not degrees:
        raise UndefinedInputError(f"graph has no {modality} nodes")
    return DegreeDistribution(modality, dict(sorted(Counter(degrees).items())))


def newman_second_neighbors(dist_user: DegreeDistribution, dist_item: DegreeDistribution) -> float:
    """Tree-like estimate of the mean second-neighbor count of a user:
    ``<U> * (<I^2> / <I> - 1)``."""
    if dist_item.mean == 0:
        raise UndefinedInputError("mean item degree is zero")
    return float(dist_user.mean * (dist_item.second_moment / dist_item.mean - 1))


class SimilarUsers(NamedTuple):
    mean_neighbors: float
    mean_second_items: float
    mean_second_items_inclusive: float


def similar_user_stats(graph: Bigraph) -> SimilarUsers:
    """Mean number of potentially similar users per user, and mean number
    of distinct items those users rated, without and with the focal
    user's own items."""
    if graph.n_users == 0:
        raise UndefinedInputError("graph has no users")
    users = graph.user_adjacency
    n_neighbors = 0
    n_exclusive = 0
    n_inclusive = 0
    for j in range(graph.n_users):
        similar = second_neighbors(graph, j, USER)
        items = set()
        for w in similar:
            items.update(users[w])
        n_neighbors += len(similar)
        n_inclusive += len(items)
        n_exclusive += len(items.difference(users[j]))
    n = graph.n_users
    return SimilarUsers(n_neighbors / n, n_exclusive / n, n_inclusive / n)


@dataclass(frozen=True)
class GraphSummary:
    n_users: int
    n_items: int
    n_edges: int
    mean_user_degree: float
    mean_item_degree: float
    mean_blcc: float
    blcc_defined: int
    mean_neighbors: float
    mean_second_items: float
    mean_second_items_inclusive: float
    newman_estimate: float
    max_user_degree: int
    max_item_degree: int

    def as_row(self) -> dict:
        return asdict(self)


SUMMARY_COLUMNS = [f.name for f in fields(GraphSummary)]
PARAM_COLUMNS = [f.name for f in fields(GeneratorParams) if f.name != "rating_values"]
STATS_COLUMNS = ["graph"] + PARAM_COLUMNS + SUMMARY_COLUMNS


def summarize(graph: Bigraph) -> GraphSummary:
    if graph.n_edges == 0:
        raise UndefinedInputError("graph has no edges")
    du = degree_distribution(graph, USER)
    di = degree_distribution(graph, ITEM)
    clustering = [blcc(graph, j, USER) for j in range(graph.n_users)]
    defined = [c.value for c in clustering if c.defined]
    similar = similar_user_stats(graph)
    return GraphSummary(
        n_users=graph.n_users,
        n_items=graph.n_items,
        n_edges=graph.n_edges,
        mean_user_degree=float(du.mean),
        mean_item_degree=float(di.mean),
        mean_blcc=sum(defined) / len(defined) if defined else 0.0,
        blcc_defined=len(defined),
        mean_neighbors=similar.mean_neighbors,
        mean_second_items=similar.mean_second_items,
        mean_second_items_inclusive=similar.mean_second_items_inclusive,
        newman_estimate=newman_second_neighbors(du, di),
        max_user_degree=du.max_degree,
        max_item_degree=di.max_degree,
    )


def stats_row(name: str, graph: Bigraph, summary: GraphSummary | None = None) -> dict:
    summary = summary or summarize(graph)
    row = {"graph": name}
    params = graph.params.to_dict() if graph.params else {}
    for col in PARAM_COLUMNS:
        row[col] = params.get(col, "")
    row.update(summary.as_row())
    return row


def write_stats_csv(rows, destination) -> None:
    with open(destination, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=STATS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value

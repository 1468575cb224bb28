"""Growth model for random bipartite user-item rating graphs.

A graph starts as ``m`` disjoint user-item pairs. Every iteration adds one
node (a user with probability ``p``, otherwise an item) and attaches its
``u`` (or ``v``) edges to distinct nodes of the other modality. Each edge
picks its target preferentially (proportional to degree) with probability
``alpha`` for users / ``beta`` for items, otherwise uniformly. A
preferential edge is routed through a three-hop bounce with probability
``b``.

RNG draw order, fixed so that runs can be replayed call by call. The
generator is ``random.Random(seed)``; initialization draws the ``m``
initial ratings with ``rng.choice(rating_values)``, then each iteration
draws:

1. modality: ``rng.random() < p`` means a new user;
2. for each edge in turn:
   a. attachment type: ``rng.random() < alpha`` (``beta``) means preferential,
   b. bounce decision (preferential edges only): ``rng.random() < b``,
   c. target: bounce micro-steps, or a preferential / uniform draw, each
      via ``rng.randrange``; collisions re-draw,
   d. rating: ``rng.choice(rating_values)``.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields
from functools import cached_property
from typing import NamedTuple

USER = "user"
ITEM = "item"

# re-draws allowed on a target collision before falling back to a uniform
# pick among the unused nodes
MAX_REDRAWS = 16


class ParameterError(ValueError):
    """Invalid generator parameter; ``field`` names the offender."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class GeneratorParams:
    m: int = 100
    T: int = 2000
    p: float = 0.5
    u: int = 7
    v: int = 7
    alpha: float = 0.5
    beta: float = 0.5
    b: float = 0.0
    seed: int = 42
    holdout_steps: int = 100
    rating_values: tuple[int, ...] = (0, 1, 2, 3, 4, 5)

    def __post_init__(self):
        for name in ("m", "u", "v"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ParameterError(name, f"must be a positive integer, got {value!r}")
        for name in ("T", "holdout_steps"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ParameterError(name, f"must be a non-negative integer, got {value!r}")
        for name in ("p", "alpha", "beta", "b"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                raise ParameterError(name, f"must be a probability in [0, 1], got {value!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ParameterError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")
        values = tuple(self.rating_values)
        if not values:
            raise ParameterError("rating_values", "must not be empty")
        if any(isinstance(r, bool) or not isinstance(r, int) for r in values):
            raise ParameterError("rating_values", "must contain integers only")
        if len(set(values)) != len(values):
            raise ParameterError("rating_values", "must not repeat values")
        object.__setattr__(self, "rating_values", values)

    @property
    def eta(self) -> float:
        """Expected number of edges added per iteration."""
        return self.p * self.u + (1 - self.p) * self.v

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rating_values"] = list(self.rating_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GeneratorParams:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(sorted(unknown)[0], "unknown parameter")
        kwargs = dict(d)
        if "rating_values" in kwargs:
            kwargs["rating_values"] = tuple(kwargs["rating_values"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def replace(self, **changes) -> GeneratorParams:
        d = self.to_dict()
        d.update(changes)
        return GeneratorParams.from_dict(d)


@dataclass
class GrowthTrace:
    """What one iteration did.

    ``preferential + random + shortfall`` equals ``u`` for a user iteration
    and ``v`` for an item iteration. ``bounced`` counts preferential edges
    whose target came from a completed bounce walk; ``fallbacks`` counts
    bounce dead ends plus collision fallbacks to the unused-node pool.
    """

    iteration: int
    modality: str
    node: int
    holdout: bool = False
    preferential: int = 0
    random: int = 0
    bounce_attempts: int = 0
    bounced: int = 0
    fallbacks: int = 0
    shortfall: int = 0

    @property
    def attached(self) -> int:
        return self.preferential + self.random


class Bounce(NamedTuple):
    target: int
    fallback: bool


class Bigraph:
    """Simple bipartite rating graph.

    Users and items have separate dense id spaces starting at 0. Training
    nodes are ``range(n_users)`` / ``range(n_items)``; nodes created by the
    holdout iterations follow them and own no training edges. Degrees and
    adjacency are over training ``edges`` only.

    While growing, the graph also keeps adjacency that includes holdout
    edges so that the holdout iterations keep the growth dynamics. Call
    :meth:`freeze` (``generate`` does) once growth is over.
    """

    def __init__(self, params: GeneratorParams | None = None):
        self.params = params
        self.edges: list[tuple[int, int, int]] = []
        self.holdout_edges: list[tuple[int, int, int]] = []
        self.trace: list[GrowthTrace] = []
        self.n_users = 0
        self.n_items = 0
        self.total_users = 0
        self.total_items = 0
        self.frozen = False
        self._holdout_phase = False
        # growth structures, include holdout edges
        self._adj = {USER: [], ITEM: []}
        self._stubs = {USER: [], ITEM: []}

    # construction -----------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        edges,
        holdout_edges=(),
        params: GeneratorParams | None = None,
        n_users: int | None = None,
        n_items: int | None = None,
        total_users: int | None = None,
        total_items: int | None = None,
    ) -> Bigraph:
        """Build a frozen graph from explicit edge lists.

        Node counts default to the smallest counts covering the edges.
        """
        g = cls(params)
        g.edges = [(int(a), int(c), int(r)) for a, c, r in edges]
        g.holdout_edges = [(int(a), int(c), int(r)) for a, c, r in holdout_edges]
        g.n_users = n_users if n_users is not None else 1 + max((e[0] for e in g.edges), default=-1)
        g.n_items = n_items if n_items is not None else 1 + max((e[1] for e in g.edges), default=-1)
        g.total_users = max(
            total_users if total_users is not None else 0,
            g.n_users,
            1 + max((e[0] for e in g.holdout_edges), default=-1),
        )
        g.total_items = max(
            total_items if total_items is not None else 0,
            g.n_items,
            1 + max((e[1] for e in g.holdout_edges), default=-1),
        )
        g._check_simple()
        g.freeze()
        return g

    def _check_simple(self):
        seen = set()
        for a, c, _ in self.edges:
            if not (0 <= a < self.n_users and 0 <= c < self.n_items):
                raise ValueError(f"edge ({a}, {c}) references an unknown node")
            if (a, c) in seen:
                raise ValueError(f"duplicate edge ({a}, {c})")
            seen.add((a, c))
        for a, c, _ in self.holdout_edges:
            if not (0 <= a < self.total_users and 0 <= c < self.total_items):
                raise ValueError(f"holdout edge ({a}, {c}) references an unknown node")
            if (a, c) in seen:
                raise ValueError(f"duplicate edge ({a}, {c})")
            seen.add((a, c))

    def freeze(self) -> Bigraph:
        self.edges = tuple(self.edges)
        self.holdout_edges = tuple(self.holdout_edges)
        self.trace = tuple(self.trace)
        self._adj = None
        self._stubs = None
        self.frozen = True
        return self

    # growth helpers ---------------------------------------------------

    def _add_node(self, modality: str) -> int:
        adj = self._adj[modality]
        adj.append([])
        node = len(adj) - 1
        if modality == USER:
            self.total_users += 1
            if not self._holdout_phase:
                self.n_users += 1
        else:
            self.total_items += 1
            if not self._holdout_phase:
                self.n_items += 1
        return node

    def _add_edge(self, user: int, item: int, rating: int):
        self._adj[USER][user].append(item)
        self._adj[ITEM][item].append(user)
        self._stubs[USER].append(user)
        self._stubs[ITEM].append(item)
        if self._holdout_phase:
            self.holdout_edges.append((user, item, rating))
        else:
            self.edges.append((user, item, rating))

    def growth_neighbors(self, modality: str, node: int) -> list[int]:
        """Current neighbors during growth, holdout edges included."""
        return self._adj[modality][node]

    def growth_degree(self, modality: str, node: int) -> int:
        return len(self._adj[modality][node])

    def growth_count(self, modality: str) -> int:
        return len(self._adj[modality])

    # read-only views --------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def users(self) -> range:
        return range(self.n_users)

    @property
    def items(self) -> range:
        return range(self.n_items)

    @cached_property
    def user_adjacency(self) -> list[dict[int, int]]:
        """``user_adjacency[u]`` maps item -> rating over training edges."""
        adj = [dict() for _ in range(self.n_users)]
        for a, c, r in self.edges:
            adj[a][c] = r
        return adj

    @cached_property
    def item_adjacency(self) -> list[dict[int, int]]:
        adj = [dict() for _ in range(self.n_items)]
        for a, c, r in self.edges:
            adj[c][a] = r
        return adj

    @property
    def user_degrees(self) -> list[int]:
        return [len(n) for n in self.user_adjacency]

    @property
    def item_degrees(self) -> list[int]:
        return [len(n) for n in self.item_adjacency]

    def neighbors(self, modality: str, node: int) -> dict[int, int]:
        if modality == USER:
            return self.user_adjacency[node]
        return self.item_adjacency[node]

    @property
    def total_nodes(self) -> int:
        return self.total_users + self.total_items

    def __repr__(self):
        return (
            f"Bigraph(users={self.n_users}, items={self.n_items}, edges={self.n_edges}, "
            f"holdout_edges={len(self.holdout_edges)})"
        )


def _other(modality: str) -> str:
    return ITEM if modality == USER else USER


def _unused_pick(graph: Bigraph, modality: str, joined: set, rng: random.Random) -> int:
    pool = [n for n in range(graph.growth_count(modality)) if n not in joined]
    return pool[rng.randrange(len(pool))]


def preferential_draw(graph: Bigraph, modality: str, joined: set, rng: random.Random) -> tuple[int, bool]:
    """Degree-proportional draw of a ``modality`` node outside ``joined``.

    Returns ``(node, fell_back)``; ``fell_back`` is set when the re-draw
    budget ran out and the pick came from the unused-node pool.
    """
    stubs = graph._stubs[modality]
    for _ in range(MAX_REDRAWS):
        node = stubs[rng.randrange(len(stubs))]
        if node not in joined:
            return node, False
    return _unused_pick(graph, modality, joined, rng), True


def uniform_draw(graph: Bigraph, modality: str, joined: set, rng: random.Random) -> tuple[int, bool]:
    n = graph.growth_count(modality)
    for _ in range(MAX_REDRAWS):
        node = rng.randrange(n)
        if node not in joined:
            return node, False
    return _unused_pick(graph, modality, joined, rng), True


def bounce(
    graph: Bigraph,
    new_node: int,
    rng: random.Random,
    modality: str = USER,
    joined: set | None = None,
) -> Bounce:
    """Three-hop walk from ``new_node`` (of ``modality``) to a fresh target.

    Draws a node already joined to ``new_node``, then one of its other
    neighbors, then one of that neighbor's neighbors not yet joined to
    ``new_node``. Any empty candidate list ends the walk and the target
    comes from a preferential draw instead (``fallback=True``).
    """
    other = _other(modality)
    attached = graph.growth_neighbors(modality, new_node)
    if joined is None:
        joined = set(attached)
    if attached:
        first = attached[rng.randrange(len(attached))]
        second_pool = [n for n in graph.growth_neighbors(other, first) if n != new_node]
        if second_pool:
            second = second_pool[rng.randrange(len(second_pool))]
            third_pool = [n for n in graph.growth_neighbors(modality, second) if n not in joined]
            if third_pool:
                return Bounce(third_pool[rng.randrange(len(third_pool))], False)
    node, _ = preferential_draw(graph, other, joined, rng)
    return Bounce(node, True)


def initialize(params: GeneratorParams) -> Bigraph:
    """``m`` disjoint user-item edges: user k is joined to item k."""
    graph = Bigraph(params)
    rng = random.Random(params.seed)
    graph._rng = rng
    for k in range(params.m):
        graph._add_node(USER)
        graph._add_node(ITEM)
        graph._add_edge(k, k, rng.choice(params.rating_values))
    return graph


def step(graph: Bigraph, params: GeneratorParams, rng: random.Random) -> Bigraph:
    """Grow ``graph`` in place by one iteration and return it."""
    if graph.frozen:
        raise ValueError("cannot grow a frozen graph")
    if rng.random() < params.p:
        modality, wanted, pref_prob = USER, params.u, params.alpha
    else:
        modality, wanted, pref_prob = ITEM, params.v, params.beta
    other = _other(modality)
    available = graph.growth_count(other)
    node = graph._add_node(modality)
    record = GrowthTrace(
        iteration=len(graph.trace), modality=modality, node=node, holdout=graph._holdout_phase
    )
    k = min(wanted, available)
    record.shortfall = wanted - k
    joined: set[int] = set()
    for _ in range(k):
        fell_back = False
        if rng.random() < pref_prob:
            record.preferential += 1
            if rng.random() < params.b:
                record.bounce_attempts += 1
                target, fell_back = bounce(graph, node, rng, modality, joined)
                if not fell_back:
                    record.bounced += 1
            else:
                target, fell_back = preferential_draw(graph, other, joined, rng)
        else:
            record.random += 1
            target, fell_back = uniform_draw(graph, other, joined, rng)
        if fell_back:
            record.fallbacks += 1
        joined.add(target)
        rating = rng.choice(params.rating_values)
        if modality == USER:
            graph._add_edge(node, target, rating)
        else:
            graph._add_edge(target, node, rating)
    graph.trace.append(record)
    return graph


def generate(params: GeneratorParams) -> Bigraph:
    """Initialize, run ``T`` iterations, then ``holdout_steps`` more whose
    edges are kept apart as ``holdout_edges``."""
    graph = initialize(params)
    rng = graph._rng
    for _ in range(params.T):
        step(graph, params, rng)
    graph._holdout_phase = True
    for _ in range(params.holdout_steps):
        step(graph, params, rng)
    del graph._rng
    return graph.freeze()

"""Random fixtures and brute-force oracles shared by the tests."""

import math
import random

from recgraph.datamodel import RatingDataModel
from recgraph.generator import Bigraph
from recgraph.recommenders import AlgorithmKind
from recgraph.similarity import similarity_function


def random_bigraph(rng: random.Random, max_nodes: int = 50, density: float | None = None) -> Bigraph:
    """Small random simple bigraph with dense ids (some nodes may be isolated)."""
    n_users = rng.randint(1, max_nodes // 2)
    n_items = rng.randint(1, max_nodes - n_users)
    density = rng.uniform(0.05, 0.6) if density is None else density
    edges = [
        (a, c, rng.randint(0, 5))
        for a in range(n_users)
        for c in range(n_items)
        if rng.random() < density
    ]
    if not edges:
        edges = [(0, 0, 3)]
    return Bigraph.from_edges(edges, n_users=n_users, n_items=n_items)


def random_tree(rng: random.Random, n_nodes: int) -> Bigraph:
    """Random bipartite tree: each new node hangs off an existing node of
    the other modality."""
    nodes = [("U", 0)]
    n = {"U": 1, "I": 0}
    edges = []
    for _ in range(n_nodes - 1):
        side, ident = nodes[rng.randrange(len(nodes))]
        new_side = "I" if side == "U" else "U"
        new = n[new_side]
        n[new_side] += 1
        nodes.append((new_side, new))
        edges.append((ident, new, 1) if side == "U" else (new, ident, 1))
    return Bigraph.from_edges(edges, n_users=n["U"], n_items=n["I"])


def random_model(rng: random.Random, max_users: int = 6, max_items: int = 6) -> RatingDataModel:
    n_users = rng.randint(1, max_users)
    n_items = rng.randint(1, max_items)
    density = rng.uniform(0.2, 1.0)
    ratings = [
        (a, c, rng.randint(0, 5))
        for a in range(n_users)
        for c in range(n_items)
        if rng.random() < density
    ]
    if not ratings:
        ratings = [(0, 0, rng.randint(0, 5))]
    return RatingDataModel.from_ratings(ratings)


# graph oracles --------------------------------------------------------


def _adjacency(graph: Bigraph):
    adj = {}
    for a, c, _ in graph.edges:
        adj.setdefault(("U", a), []).append(("I", c))
        adj.setdefault(("I", c), []).append(("U", a))
    return adj


def bfs_distances(graph: Bigraph, start, adj=None):
    """Distances from ``start`` (a ("U"|"I", id) pair) by breadth-first search."""
    from collections import deque

    adj = _adjacency(graph) if adj is None else adj
    dist = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for n in adj.get(node, ()):
            if n not in dist:
                dist[n] = dist[node] + 1
                queue.append(n)
    return dist


def brute_blcc(graph: Bigraph, side: str, node: int, adj=None):
    """BLCC from BFS distances; None when the potential count is zero."""
    adj = _adjacency(graph) if adj is None else adj
    dist = bfs_distances(graph, (side, node), adj)
    second = sum(1 for d in dist.values() if d == 2)
    potential = sum(len(adj[other]) - 1 for other, d in dist.items() if d == 1)
    if potential == 0:
        return None
    return 1.0 - second / potential


# recommender oracles --------------------------------------------------
# Written against the documented formulas only: enumerate everything,
# then sort by (-estimate, item).


def _clamp(value, data):
    low, high = data.rating_range
    return min(high, max(low, value))


def _weighted(terms):
    den = math.fsum(abs(s) for s, _ in terms)
    if den == 0.0:
        return None
    return math.fsum(s * r for s, r in terms) / den


def _shares(x, y):
    return bool(set(x) & set(y))


def oracle_candidates(data, user):
    """Items rated by a user who shares an item with ``user``, minus the
    user's own items."""
    own = set(data.users[user])
    out = set()
    for other, row in data.users.items():
        if other != user and own & set(row):
            out |= set(row)
    return out - own


def oracle_user_neighbors(data, user, kind, size=None, threshold=None):
    sim = similarity_function(kind, data.n_items)
    scored = []
    for other, row in data.users.items():
        if other == user or not _shares(data.users[user], row):
            continue
        s = sim(data.users[user], row)
        if s is None:
            continue
        if threshold is None and s > 0 or threshold is not None and s >= threshold:
            scored.append((other, s))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored if size is None else scored[:size]


def oracle_estimate(data, config, user, item, model=None):
    kind = AlgorithmKind(config.algorithm)
    if kind in (AlgorithmKind.USER_BASED, AlgorithmKind.USER_THRESHOLD):
        size = config.neighborhood_size if kind is AlgorithmKind.USER_BASED else None
        threshold = config.threshold if kind is AlgorithmKind.USER_THRESHOLD else None
        neighbors = oracle_user_neighbors(data, user, config.similarity, size, threshold)
        value = _weighted([(s, data.users[w][item]) for w, s in neighbors if item in data.users[w]])
    elif kind in (AlgorithmKind.ITEM_BASED, AlgorithmKind.KNN_ITEM):
        sim = similarity_function(config.similarity, data.n_users)
        rated = []
        for j, r in data.users[user].items():
            if j == item or not _shares(data.items[item], data.items[j]):
                continue
            s = sim(data.items[item], data.items[j])
            if s is not None:
                rated.append((j, s, r))
        if kind is AlgorithmKind.KNN_ITEM:
            rated.sort(key=lambda t: (-t[1], t[0]))
            rated = rated[: config.k]
        value = _weighted([(s, r) for _, s, r in rated])
    elif kind is AlgorithmKind.SLOPE_ONE:
        num, den = [], []
        for j, r in data.users[user].items():
            both = [w for w in data.items[item] if j in data.users[w]]
            if j == item or not both:
                continue
            mean = sum(data.users[w][item] - data.users[w][j] for w in both) / len(both)
            num.append(len(both) * (r + mean))
            den.append(len(both))
        value = math.fsum(num) / math.fsum(den) if den else None
    else:
        p = model.P[model.user_index[user]]
        q = model.Q[model.item_index[item]]
        acc = 0.0
        for a, b in zip(p.tolist(), q.tolist()):
            acc += a * b
        value = model.mean + acc
    return None if value is None else _clamp(value, data)


def oracle_recommend(data, config, user, top_n, model=None):
    if top_n <= 0:
        return []
    scored = []
    for item in oracle_candidates(data, user):
        value = oracle_estimate(data, config, user, item, model)
        if value is not None:
            scored.append((item, value))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:top_n]

"""Six collaborative-filtering recommenders behind one interface.

Every model is built from a :class:`RatingDataModel`, estimates single
preferences, produces top-N lists, absorbs batches of new ratings and
reports a deterministic memory footprint.

Candidate items for a user are the items rated by the users who share at
least one rated item with them, minus the items the user already rated.
A pair of users (or items) only counts as evidence when its similarity is
defined and the two vectors share at least one dimension. Estimates are
clamped to the data model's rating range. Weighted sums use ``math.fsum``
so results do not depend on summation order.

Footprint accounting, in bytes (see :data:`COSTS`):

* rating views: ``2 * VIEW_ENTRY`` per rating + ``ROW`` per user and per item
* every model: ``MODEL`` fixed overhead
* SlopeOne: ``PAIR`` per stored item pair
* SVD: ``REAL * factors`` per user and per item, plus ``REAL`` for the mean
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np
from numba import njit

from recgraph.datamodel import RatingDataModel
from recgraph.similarity import SimilarityKind, similarity_function


class AlgorithmKind(str, Enum):
    USER_BASED = "userbased"
    ITEM_BASED = "itembased"
    SLOPE_ONE = "slopeone"
    USER_THRESHOLD = "userthreshold"
    KNN_ITEM = "knnitem"
    SVD = "svd"


COSTS = {
    "VIEW_ENTRY": 16,
    "ROW": 32,
    "MODEL": 64,
    "PAIR": 24,
    "REAL": 8,
}


class ConfigError(ValueError):
    pass


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class RecommenderConfig:
    algorithm: AlgorithmKind = AlgorithmKind.USER_BASED
    similarity: SimilarityKind = SimilarityKind.PEARSON
    neighborhood_size: int = 200
    threshold: float | None = None
    k: int = 20
    factors: int = 10
    training_iterations: int = 200
    learning_rate: float = 0.01
    regularization: float = 0.02
    update_passes: int = 10
    top_n: int = 10
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "algorithm", AlgorithmKind(self.algorithm))
        object.__setattr__(self, "similarity", SimilarityKind(self.similarity))
        for name in ("neighborhood_size", "k", "factors", "training_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.top_n < 0 or self.update_passes < 0:
            raise ConfigError("top_n and update_passes must be non-negative")
        if self.algorithm is AlgorithmKind.USER_THRESHOLD:
            if self.threshold is None:
                raise ConfigError("threshold is required for userthreshold")
            if self.threshold < 0:
                raise ConfigError("threshold must be non-negative")

    @property
    def label(self) -> str:
        return self.algorithm.value

    def replace(self, **changes) -> RecommenderConfig:
        return replace(self, **changes)


class Recommendation(NamedTuple):
    items: list[tuple[int, float]]
    known_user: bool = True


class UpdateResult(NamedTuple):
    accepted: int
    rejected: list[tuple[int, int, int]]


def _rank(scored, top_n: int) -> list[tuple[int, float]]:
    if top_n <= 0:
        return []
    return heapq.nsmallest(top_n, scored, key=lambda pair: (-pair[1], pair[0]))


class Recommender:
    """Common machinery; subclasses implement ``_estimate`` and may
    override candidate generation."""

    kind: AlgorithmKind

    def __init__(self, config: RecommenderConfig, data: RatingDataModel):
        if data.n_ratings == 0:
            raise BuildError("cannot build a model from an empty data model")
        self.config = config
        self.data = data.copy()
        self.low, self.high = data.rating_range
        self._build()

    def _build(self):
        pass

    def _clamp(self, value: float) -> float:
        return float(min(self.high, max(self.low, value)))

    def _has_evidence(self, x, y) -> bool:
        if len(y) < len(x):
            x, y = y, x
        return any(k in y for k in x)

    def candidate_items(self, user: int) -> set[int]:
        users = self.data.users
        own = users[user]
        found = set()
        for item in own:
            for other in self.data.items[item]:
                if other != user:
                    found.update(users[other])
        found.difference_update(own)
        return found

    def estimate(self, user: int, item: int) -> float | None:
        if user not in self.data.users or item not in self.data.items:
            return None
        value = self._estimate(user, item)
        return None if value is None else self._clamp(value)

    def _estimate(self, user: int, item: int) -> float | None:
        raise NotImplementedError

    def recommend(self, user: int, top_n: int | None = None) -> Recommendation:
        top_n = self.config.top_n if top_n is None else top_n
        if user not in self.data.users:
            return Recommendation([], known_user=False)
        if top_n <= 0:
            return Recommendation([])
        scored = []
        for item in self.candidate_items(user):
            value = self._estimate(user, item)
            if value is not None:
                scored.append((item, self._clamp(value)))
        return Recommendation(_rank(scored, top_n))

    def update(self, ratings) -> UpdateResult:
        accepted = []
        rejected = []
        for user, item, rating in ratings:
            if self.data.add(user, item, rating):
                accepted.append((user, item, rating))
                self._absorb(user, item, rating)
            else:
                rejected.append((user, item, rating))
        self._after_update(accepted)
        return UpdateResult(len(accepted), rejected)

    def _absorb(self, user, item, rating):
        pass

    def _after_update(self, accepted):
        pass

    def _views_bytes(self) -> int:
        d = self.data
        return 2 * COSTS["VIEW_ENTRY"] * d.n_ratings + COSTS["ROW"] * (d.n_users + d.n_items)

    def footprint(self) -> int:
        return COSTS["MODEL"] + self._views_bytes()


class UserBasedRecommender(Recommender):
    """Similarity to every other user is computed at request time; the
    ``neighborhood_size`` most similar users with positive similarity form
    the neighborhood."""

    kind = AlgorithmKind.USER_BASED

    def _build(self):
        self._needs_overlap = self.config.similarity in (
            SimilarityKind.LOGLIKELIHOOD,
            SimilarityKind.TANIMOTO,
        )

    def user_similarity(self, a: int, b: int) -> float | None:
        return self._scorer()(self.data.users[a], self.data.users[b])

    def _scorer(self):
        sim = similarity_function(self.config.similarity, self.data.n_items)
        if not self._needs_overlap:
            return sim
        evidence = self._has_evidence
        return lambda x, y: sim(x, y) if evidence(x, y) else None

    def _accepts(self, s: float) -> bool:
        return s > 0.0

    def neighborhood(self, user: int) -> list[tuple[int, float]]:
        """Neighbors as ``(user, similarity)``, most similar first."""
        mine = self.data.users[user]
        sim = self._scorer()
        scored = []
        for other, theirs in self.data.users.items():
            if other == user:
                continue
            s = sim(mine, theirs)
            if s is not None and self._accepts(s):
                scored.append((other, s))
        return self._select(scored)

    def _select(self, scored):
        return _rank(scored, self.config.neighborhood_size)

    @staticmethod
    def _weighted(terms):
        num = math.fsum(s * r for s, r in terms)
        den = math.fsum(abs(s) for s, _ in terms)
        return None if den == 0.0 else num / den

    def _estimate(self, user, item):
        raters = self.data.items[item]
        terms = [(s, raters[w]) for w, s in self.neighborhood(user) if w in raters]
        return self._weighted(terms)

    def recommend(self, user: int, top_n: int | None = None) -> Recommendation:
        top_n = self.config.top_n if top_n is None else top_n
        if user not in self.data.users:
            return Recommendation([], known_user=False)
        if top_n <= 0:
            return Recommendation([])
        own = self.data.users[user]
        terms: dict[int, list] = {}
        for w, s in self.neighborhood(user):
            for item, rating in self.data.users[w].items():
                if item not in own:
                    terms.setdefault(item, []).append((s, rating))
        scored = []
        for item, item_terms in terms.items():
            value = self._weighted(item_terms)
            if value is not None:
                scored.append((item, self._clamp(value)))
        return Recommendation(_rank(scored, top_n))


class UserThresholdRecommender(UserBasedRecommender):
    """User-based, with every user at or above ``threshold`` as neighbor."""

    kind = AlgorithmKind.USER_THRESHOLD

    def _accepts(self, s: float) -> bool:
        return s >= self.config.threshold

    def _select(self, scored):
        return sorted(scored, key=lambda pair: (-pair[1], pair[0]))


class ItemBasedRecommender(Recommender):
    kind = AlgorithmKind.ITEM_BASED

    def _build(self):
        self._needs_overlap = self.config.similarity in (
            SimilarityKind.LOGLIKELIHOOD,
            SimilarityKind.TANIMOTO,
        )

    def item_similarity(self, a: int, b: int) -> float | None:
        return self._scorer()(self.data.items[a], self.data.items[b])

    def _scorer(self):
        sim = similarity_function(self.config.similarity, self.data.n_users)
        if not self._needs_overlap:
            return sim
        evidence = self._has_evidence
        return lambda x, y: sim(x, y) if evidence(x, y) else None

    def _neighbors(self, user, item) -> list[tuple[int, float, int]]:
        """``(item, similarity, rating)`` for the user's rated items usable
        as evidence about ``item``, in ascending item order."""
        sim = self._scorer()
        target = self.data.items[item]
        out = []
        for other, rating in sorted(self.data.users[user].items()):
            if other == item:
                continue
            s = sim(target, self.data.items[other])
            if s is not None:
                out.append((other, s, rating))
        return out

    def _estimate(self, user, item):
        terms = [(s, r) for _, s, r in self._neighbors(user, item)]
        return UserBasedRecommender._weighted(terms)


class KnnItemRecommender(ItemBasedRecommender):
    """Item-based, using only the ``k`` rated items most similar to the
    target item."""

    kind = AlgorithmKind.KNN_ITEM

    def _estimate(self, user, item):
        nearest = heapq.nsmallest(
            self.config.k, self._neighbors(user, item), key=lambda t: (-t[1], t[0])
        )
        return UserBasedRecommender._weighted([(s, r) for _, s, r in nearest])


class SlopeOneRecommender(Recommender):
    """Weighted Slope One over precomputed pairwise rating differences.

    ``_diffs[(a, b)]`` with ``a < b`` holds ``[sum(r_a - r_b), count]`` over
    users who rated both items.
    """

    kind = AlgorithmKind.SLOPE_ONE

    def _build(self):
        diffs: dict[tuple[int, int], list] = {}
        for row in self.data.users.values():
            rated = sorted(row.items())
            for x in range(len(rated)):
                a, ra = rated[x]
                for y in range(x + 1, len(rated)):
                    b, rb = rated[y]
                    entry = diffs.get((a, b))
                    if entry is None:
                        diffs[(a, b)] = [ra - rb, 1]
                    else:
                        entry[0] += ra - rb
                        entry[1] += 1
        self._diffs = diffs
        self.pairs_touched = 0

    def diff(self, i: int, j: int) -> tuple[float, int] | None:
        """Mean of ``r_i - r_j`` and the co-rating count, or None."""
        if i == j:
            return None
        entry = self._diffs.get((i, j) if i < j else (j, i))
        if entry is None:
            return None
        total, count = entry
        mean = total / count
        return (mean if i < j else -mean), count

    def _estimate(self, user, item):
        num = []
        den = []
        for j, rating in self.data.users[user].items():
            found = self.diff(item, j)
            if found is not None:
                mean, count = found
                num.append(count * (rating + mean))
                den.append(count)
        if not den:
            return None
        return math.fsum(num) / math.fsum(den)

    def _absorb(self, user, item, rating):
        # data.add already inserted (user, item); pair it with the others
        for other, r_other in self.data.users[user].items():
            if other == item:
                continue
            if item < other:
                key, delta = (item, other), rating - r_other
            else:
                key, delta = (other, item), r_other - rating
            entry = self._diffs.get(key)
            if entry is None:
                self._diffs[key] = [delta, 1]
            else:
                entry[0] += delta
                entry[1] += 1
            self.pairs_touched += 1

    @property
    def n_pairs(self) -> int:
        return len(self._diffs)

    def footprint(self) -> int:
        return super().footprint() + COSTS["PAIR"] * len(self._diffs)


@njit(cache=True)
def _sgd(users, items, ratings, P, Q, mu, lr, reg, epochs, touches):
    n_factors = P.shape[1]
    for _ in range(epochs):
        for k in range(ratings.shape[0]):
            u = users[k]
            i = items[k]
            pred = mu
            for f in range(n_factors):
                pred += P[u, f] * Q[i, f]
            err = ratings[k] - pred
            for f in range(n_factors):
                pu = P[u, f]
                qi = Q[i, f]
                P[u, f] = pu + lr * (err * qi - reg * pu)
                Q[i, f] = qi + lr * (err * pu - reg * qi)
            touches[k] += 1


@njit(cache=True)
def _rmse(users, items, ratings, P, Q, mu):
    n_factors = P.shape[1]
    total = 0.0
    for k in range(ratings.shape[0]):
        pred = mu
        for f in range(n_factors):
            pred += P[users[k], f] * Q[items[k], f]
        total += (ratings[k] - pred) ** 2
    return math.sqrt(total / ratings.shape[0])


@njit(cache=True)
def _svd_top(u, uptr, uidx, iptr, iidx, item_ids, P, Q, mu, low, high, top_n):
    """Top ``top_n`` candidate rows for user row ``u`` by (-score, item id).

    Candidates are the items of users sharing an item with ``u``, minus
    the items ``u`` rated; all indices are factor-matrix rows.
    """
    n_factors = P.shape[1]
    mark = np.zeros(Q.shape[0], np.uint8)
    for k in range(uptr[u], uptr[u + 1]):
        mark[uidx[k]] = 2
    best_rows = np.empty(top_n, np.int64)
    best_scores = np.empty(top_n, np.float64)
    nb = 0
    for k in range(uptr[u], uptr[u + 1]):
        i = uidx[k]
        for t in range(iptr[i], iptr[i + 1]):
            w = iidx[t]
            if w == u:
                continue
            for s in range(uptr[w], uptr[w + 1]):
                j = uidx[s]
                if mark[j] != 0:
                    continue
                mark[j] = 1
                acc = 0.0
                for f in range(n_factors):
                    acc += P[u, f] * Q[j, f]
                score = min(high, max(low, mu + acc))
                # insert into the sorted best list if it makes the cut
                if nb == top_n:
                    last = nb - 1
                    if score < best_scores[last] or (
                        score == best_scores[last] and item_ids[j] > item_ids[best_rows[last]]
                    ):
                        continue
                    pos = last
                else:
                    pos = nb
                    nb += 1
                while pos > 0 and (
                    score > best_scores[pos - 1]
                    or (score == best_scores[pos - 1] and item_ids[j] < item_ids[best_rows[pos - 1]])
                ):
                    best_scores[pos] = best_scores[pos - 1]
                    best_rows[pos] = best_rows[pos - 1]
                    pos -= 1
                best_scores[pos] = score
                best_rows[pos] = j
    return best_rows[:nb], best_scores[:nb]


def _csr(rows, cols, n_rows):
    order = np.argsort(rows, kind="stable")
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
    return indptr, cols[order]


class SVDRecommender(Recommender):
    """Matrix factorization trained by plain SGD.

    Prediction is ``mean + p_u . q_i``. Factors start uniform in
    [-0.05, 0.05]; training visits the ratings in data-model order for
    ``training_iterations`` epochs. An update runs ``update_passes`` SGD
    passes over the new ratings only, with fresh factors for unseen users
    and items; the global mean is kept.
    """

    kind = AlgorithmKind.SVD
    INIT_SCALE = 0.05

    def _build(self):
        cfg = self.config
        self._rng = np.random.default_rng(cfg.seed)
        self.user_index = {u: n for n, u in enumerate(sorted(self.data.users))}
        self.item_index = {i: n for n, i in enumerate(sorted(self.data.items))}
        self.P = self._rng.uniform(-self.INIT_SCALE, self.INIT_SCALE, (len(self.user_index), cfg.factors))
        self.Q = self._rng.uniform(-self.INIT_SCALE, self.INIT_SCALE, (len(self.item_index), cfg.factors))
        users, items, ratings = self._arrays(self.data.ratings())
        self.mean = float(ratings.mean())
        self.touches = np.zeros(ratings.shape[0], dtype=np.int64)
        self.rmse_history = [_rmse(users, items, ratings, self.P, self.Q, self.mean)]
        _sgd(users, items, ratings, self.P, self.Q, self.mean,
             cfg.learning_rate, cfg.regularization, cfg.training_iterations, self.touches)
        self.rmse_history.append(_rmse(users, items, ratings, self.P, self.Q, self.mean))
        self._rated_users = users
        self._rated_items = items
        self._index_views()

    def _index_views(self):
        # CSR copies of both views in factor-row space, for recommend
        users, items = self._rated_users, self._rated_items
        self._item_ids = np.fromiter(self.item_index, dtype=np.int64, count=len(self.item_index))
        self._uptr, self._uidx = _csr(users, items, self.P.shape[0])
        self._iptr, self._iidx = _csr(items, users, self.Q.shape[0])

    def _arrays(self, ratings):
        triples = list(ratings)
        users = np.fromiter((self.user_index[t[0]] for t in triples), dtype=np.int64, count=len(triples))
        items = np.fromiter((self.item_index[t[1]] for t in triples), dtype=np.int64, count=len(triples))
        values = np.fromiter((t[2] for t in triples), dtype=np.float64, count=len(triples))
        return users, items, values

    def _estimate(self, user, item):
        p = self.P[self.user_index[user]]
        q = self.Q[self.item_index[item]]
        acc = 0.0
        for f in range(p.shape[0]):
            acc += p[f] * q[f]
        return self.mean + acc

    def recommend(self, user: int, top_n: int | None = None) -> Recommendation:
        top_n = self.config.top_n if top_n is None else top_n
        if user not in self.data.users:
            return Recommendation([], known_user=False)
        if top_n <= 0:
            return Recommendation([])
        rows, scores = _svd_top(
            self.user_index[user], self._uptr, self._uidx, self._iptr, self._iidx,
            self._item_ids, self.P, self.Q, self.mean, float(self.low), float(self.high), top_n,
        )
        return Recommendation(list(zip(self._item_ids[rows].tolist(), scores.tolist())))

    def _grow(self, index, matrix, key):
        if key in index:
            return matrix
        index[key] = len(index)
        row = self._rng.uniform(-self.INIT_SCALE, self.INIT_SCALE, (1, self.config.factors))
        return np.vstack([matrix, row])

    def _after_update(self, accepted):
        if not accepted:
            return
        for user, item, _ in accepted:
            self.P = self._grow(self.user_index, self.P, user)
            self.Q = self._grow(self.item_index, self.Q, item)
        users, items, ratings = self._arrays(accepted)
        scratch = np.zeros(len(accepted), dtype=np.int64)
        _sgd(users, items, ratings, self.P, self.Q, self.mean, self.config.learning_rate,
             self.config.regularization, self.config.update_passes, scratch)
        self._rated_users = np.concatenate([self._rated_users, users])
        self._rated_items = np.concatenate([self._rated_items, items])
        self._index_views()

    def footprint(self) -> int:
        factors_bytes = COSTS["REAL"] * self.config.factors * (self.P.shape[0] + self.Q.shape[0])
        return super().footprint() + factors_bytes + COSTS["REAL"]


def warm_kernels() -> None:
    """Load (or compile) the numba kernels so the first timed call does
    not pay for it."""
    data = RatingDataModel.from_ratings([(0, 0, 1), (0, 1, 2), (1, 0, 3), (1, 2, 4)])
    model = SVDRecommender(RecommenderConfig(algorithm=AlgorithmKind.SVD, training_iterations=1), data)
    model.recommend(0)
    model.update([(2, 1, 5)])


ALGORITHMS = {
    AlgorithmKind.USER_BASED: UserBasedRecommender,
    AlgorithmKind.ITEM_BASED: ItemBasedRecommender,
    AlgorithmKind.SLOPE_ONE: SlopeOneRecommender,
    AlgorithmKind.USER_THRESHOLD: UserThresholdRecommender,
    AlgorithmKind.KNN_ITEM: KnnItemRecommender,
    AlgorithmKind.SVD: SVDRecommender,
}


def build(config: RecommenderConfig, data: RatingDataModel) -> Recommender:
    return ALGORITHMS[config.algorithm](config, data)


def estimate(model: Recommender, user: int, item: int) -> float | None:
    return model.estimate(user, item)


def recommend(model: Recommender, user: int, top_n: int | None = None) -> Recommendation:
    return model.recommend(user, top_n)


def update(model: Recommender, new_ratings) -> UpdateResult:
    return model.update(new_ratings)


def footprint(model: Recommender) -> int:
    return model.footprint()

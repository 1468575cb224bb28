"""In-memory sparse rating store with user-major and item-major views."""

from __future__ import annotations

from recgraph.generator import Bigraph

DEFAULT_RATING_RANGE = (0, 5)


class DuplicateRatingError(ValueError):
    pass


class RatingDataModel:
    """``users[u]`` maps item -> rating and ``items[i]`` maps user -> rating;
    the two views are kept as exact transposes."""

    def __init__(self, rating_range: tuple[int, int] = DEFAULT_RATING_RANGE):
        self.users: dict[int, dict[int, int]] = {}
        self.items: dict[int, dict[int, int]] = {}
        self.n_ratings = 0
        self.rating_range = rating_range

    @classmethod
    def from_ratings(cls, ratings, rating_range=DEFAULT_RATING_RANGE) -> RatingDataModel:
        data = cls(rating_range)
        for user, item, rating in ratings:
            if not data.add(user, item, rating):
                raise DuplicateRatingError(f"duplicate rating ({user}, {item})")
        return data

    @classmethod
    def from_graph(cls, graph: Bigraph) -> RatingDataModel:
        if graph.params is not None:
            values = graph.params.rating_values
            rating_range = (min(values), max(values))
        else:
            rating_range = DEFAULT_RATING_RANGE
        return cls.from_ratings(graph.edges, rating_range)

    def add(self, user: int, item: int, rating: int) -> bool:
        """Insert one rating; False (and no change) if the pair exists."""
        row = self.users.get(user)
        if row is None:
            row = self.users[user] = {}
        elif item in row:
            return False
        row[item] = rating
        col = self.items.get(item)
        if col is None:
            col = self.items[item] = {}
        col[user] = rating
        self.n_ratings += 1
        return True

    def rating(self, user: int, item: int) -> int | None:
        return self.users.get(user, {}).get(item)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def ratings(self):
        for user, row in self.users.items():
            for item, rating in row.items():
                yield user, item, rating

    def copy(self) -> RatingDataModel:
        other = RatingDataModel(self.rating_range)
        other.users = {u: dict(row) for u, row in self.users.items()}
        other.items = {i: dict(col) for i, col in self.items.items()}
        other.n_ratings = self.n_ratings
        return other

    def __repr__(self):
        return f"RatingDataModel(users={self.n_users}, items={self.n_items}, ratings={self.n_ratings})"

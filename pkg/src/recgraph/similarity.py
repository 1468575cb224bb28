"""Similarity of two sparse rating vectors.

A vector is a mapping dimension id -> rating. Pearson, Spearman and
Euclidean only look at co-rated dimensions; LogLikelihood and Tanimoto look
at which dimensions are present. ``None`` means the similarity is
undefined for the pair; it is never coerced to 0.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Mapping

SparseRatings = Mapping[int, int]


class SimilarityKind(str, Enum):
    PEARSON = "pearson"
    EUCLIDEAN = "euclidean"
    LOGLIKELIHOOD = "loglikelihood"
    SPEARMAN = "spearman"
    TANIMOTO = "tanimoto"


def _co_rated(x: SparseRatings, y: SparseRatings) -> tuple[list, list]:
    common = x.keys() & y.keys() if len(x) <= len(y) else y.keys() & x.keys()
    if not common:
        return [], []
    common = sorted(common)
    return [x[k] for k in common], [y[k] for k in common]


def _correlation(xs, ys) -> float | None:
    n = len(xs)
    if n < 2:
        return None
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sxx = syy = 0.0
    for a, b in zip(xs, ys):
        da = a - mx
        db = b - my
        sxy += da * db
        sxx += da * da
        syy += db * db
    if sxx == 0.0 or syy == 0.0:
        return None
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson(x: SparseRatings, y: SparseRatings) -> float | None:
    return _correlation(*_co_rated(x, y))


def average_ranks(values) -> list[float]:
    """Ranks starting at 1; tied values share the mean of their ranks."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman(x: SparseRatings, y: SparseRatings) -> float | None:
    xs, ys = _co_rated(x, y)
    if len(xs) < 2:
        return None
    return _correlation(average_ranks(xs), average_ranks(ys))


def euclidean(x: SparseRatings, y: SparseRatings) -> float | None:
    xs, ys = _co_rated(x, y)
    if not xs:
        return None
    d = math.sqrt(sum((a - b) ** 2 for a, b in zip(xs, ys)))
    return 1.0 / (1.0 + d)


def _xlogx(n: float) -> float:
    return n * math.log(n) if n > 0 else 0.0


def _entropy(*counts) -> float:
    # unnormalized Shannon entropy: N log N - sum(k log k)
    return _xlogx(sum(counts)) - sum(_xlogx(k) for k in counts)


def log_likelihood_ratio(k11: int, k12: int, k21: int, k22: int) -> float:
    """G^2 statistic of a 2x2 contingency table."""
    row = _entropy(k11 + k12, k21 + k22)
    col = _entropy(k11 + k21, k12 + k22)
    mat = _entropy(k11, k12, k21, k22)
    return max(0.0, 2.0 * (row + col - mat))


def loglikelihood(x: SparseRatings, y: SparseRatings, universe_size: int | None = None) -> float:
    both = len(x.keys() & y.keys()) if len(x) <= len(y) else len(y.keys() & x.keys())
    union = len(x) + len(y) - both
    n = union if universe_size is None else universe_size
    if n < union:
        raise ValueError(f"universe_size {n} smaller than the {union} dimensions in use")
    g2 = log_likelihood_ratio(both, len(x) - both, len(y) - both, n - union)
    return 1.0 - 1.0 / (1.0 + g2)


def tanimoto(x: SparseRatings, y: SparseRatings) -> float | None:
    both = len(x.keys() & y.keys())
    union = len(x) + len(y) - both
    if union == 0:
        return None
    return both / union


_RULES = {
    SimilarityKind.PEARSON: pearson,
    SimilarityKind.EUCLIDEAN: euclidean,
    SimilarityKind.SPEARMAN: spearman,
    SimilarityKind.TANIMOTO: tanimoto,
}


def similarity_function(kind: SimilarityKind | str, universe_size: int | None = None):
    """Two-argument scorer for ``kind``, with ``universe_size`` bound for
    LogLikelihood."""
    kind = SimilarityKind(kind)
    if kind is SimilarityKind.LOGLIKELIHOOD:
        return lambda x, y: loglikelihood(x, y, universe_size)
    return _RULES[kind]


def similarity(
    kind: SimilarityKind | str,
    x: SparseRatings,
    y: SparseRatings,
    universe_size: int | None = None,
) -> float | None:
    return similarity_function(kind, universe_size)(x, y)

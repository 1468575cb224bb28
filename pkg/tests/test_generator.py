import random
from collections import Counter

import pytest

from recgraph.generator import (
    ITEM,
    USER,
    MAX_REDRAWS,
    Bigraph,
    GeneratorParams,
    ParameterError,
    bounce,
    generate,
    initialize,
    preferential_draw,
    step,
)
from recgraph.graphio import dumps


def params(**kw):
    base = dict(m=100, T=200, p=0.5, u=7, v=7, alpha=0.5, beta=0.5, b=0.3, seed=7, holdout_steps=10)
    base.update(kw)
    return GeneratorParams(**base)


# parameters ---------------------------------------------------------------


@pytest.mark.parametrize(
    "field,value",
    [("m", 0), ("T", -1), ("p", 1.5), ("p", -0.1), ("u", 0), ("v", 0), ("alpha", 2.0),
     ("beta", -1.0), ("b", 1.01), ("holdout_steps", -1), ("seed", -1)],
)
def test_invalid_parameter_names_field(field, value):
    with pytest.raises(ParameterError) as err:
        params(**{field: value})
    assert err.value.field == field
    assert field in str(err.value)


def test_params_round_trip_through_dict():
    p = params(rating_values=(1, 2, 3))
    assert GeneratorParams.from_dict(p.to_dict()) == p
    with pytest.raises(ParameterError):
        GeneratorParams.from_dict({**p.to_dict(), "gamma": 1})


def test_eta_is_mixture_of_edge_counts():
    assert params(p=0.25, u=4, v=8).eta == pytest.approx(0.25 * 4 + 0.75 * 8)


# initialize ---------------------------------------------------------------


def test_initialize_two_pairs():
    g = initialize(params(m=2, T=0))
    assert (g.n_users, g.n_items) == (2, 2)
    assert [(a, c) for a, c, _ in g.edges] == [(0, 0), (1, 1)]


def test_initialize_single_pair_degrees():
    g = generate(params(m=1, T=0, holdout_steps=0))
    assert g.user_degrees == [1]
    assert g.item_degrees == [1]


def test_initial_ratings_follow_seed():
    a = generate(params(m=3, T=0, seed=42, holdout_steps=0))
    b = generate(params(m=3, T=0, seed=42, holdout_steps=0))
    assert a.edges == b.edges
    rng = random.Random(42)
    assert [r for _, _, r in a.edges] == [rng.choice(range(6)) for _ in range(3)]


# step -----------------------------------------------------------------------


def test_replay_single_uniform_step():
    # the documented draw order, replayed by hand
    for seed in range(20):
        p = GeneratorParams(m=2, T=1, p=1.0, u=1, v=1, alpha=0.0, beta=0.0, b=0.5, seed=seed, holdout_steps=0)
        g = generate(p)
        rng = random.Random(seed)
        r0, r1 = rng.choice(p.rating_values), rng.choice(p.rating_values)
        assert rng.random() < 1.0  # modality: user
        assert not rng.random() < 0.0  # attachment type: uniform
        target = rng.randrange(2)
        rating = rng.choice(p.rating_values)
        assert g.edges == ((0, 0, r0), (1, 1, r1), (2, target, rating))


def test_replay_preferential_with_bounce_decision():
    p = GeneratorParams(m=3, T=1, p=1.0, u=1, v=1, alpha=1.0, beta=1.0, b=0.0, seed=5, holdout_steps=0)
    g = generate(p)
    rng = random.Random(5)
    ratings = [rng.choice(p.rating_values) for _ in range(3)]
    rng.random()  # modality
    rng.random()  # attachment type
    rng.random()  # bounce decision (b = 0: never)
    stubs = [0, 1, 2]
    target = stubs[rng.randrange(3)]
    rating = rng.choice(p.rating_values)
    assert g.edges == tuple((k, k, ratings[k]) for k in range(3)) + ((3, target, rating),)


def test_p_one_adds_only_users():
    g = generate(params(p=1.0, T=50, m=10, u=3))
    assert g.n_items == 10
    assert all(t.modality == USER for t in g.trace)


def test_trace_counts_sum_to_edges_per_iteration():
    g = generate(params(T=300))
    for t in g.trace:
        wanted = 7
        assert t.preferential + t.random + t.shortfall == wanted
        assert t.bounced <= t.bounce_attempts <= t.preferential
    training = [t for t in g.trace if not t.holdout]
    assert len(g.edges) == 100 + sum(t.attached for t in training)


def test_alpha_zero_never_bounces_user_edges():
    g = generate(params(alpha=0.0, b=1.0, T=300))
    assert all(t.bounce_attempts == 0 for t in g.trace if t.modality == USER)


def test_alpha_beta_zero_never_bounce():
    g = generate(params(alpha=0.0, beta=0.0, b=1.0, T=300))
    assert sum(t.bounce_attempts for t in g.trace) == 0


def test_shortfall_when_other_side_too_small():
    g = generate(GeneratorParams(m=2, T=100, p=1.0, u=3, v=1, seed=1, holdout_steps=0))
    assert g.n_users == 102 and g.n_items == 2
    assert all(t.shortfall == 1 for t in g.trace)
    assert len(g.edges) == 2 + 2 * 100 <= 2 + 300


def test_graph_is_simple():
    for seed in range(5):
        g = generate(params(seed=seed, T=500, alpha=1.0, beta=1.0, b=0.8))
        pairs = [(a, c) for a, c, _ in g.edges + g.holdout_edges]
        assert len(pairs) == len(set(pairs))


def test_equal_edge_counts_give_exact_edge_total():
    g = generate(params(m=2, T=2000, u=7, v=7, holdout_steps=0))
    shortfall = sum(t.shortfall for t in g.trace)
    assert len(g.edges) == 2 + 7 * 2000 - shortfall
    # with m = 100 no iteration can run short
    g = generate(params(m=100, T=2000, u=7, v=7, holdout_steps=0))
    assert len(g.edges) == 100 + 7 * 2000


def test_node_counts_include_holdout():
    p = params(T=300, holdout_steps=40)
    g = generate(p)
    assert g.n_users + g.n_items == 2 * p.m + p.T
    assert g.total_nodes == 2 * p.m + p.T + p.holdout_steps
    assert len(g.holdout_edges) == 7 * 40


def test_holdout_edges_touch_new_nodes():
    g = generate(params(T=300, holdout_steps=40))
    for a, c, _ in g.holdout_edges:
        assert a >= g.n_users or c >= g.n_items


def test_same_seed_same_bytes():
    assert dumps(generate(params(T=500))) == dumps(generate(params(T=500)))
    assert dumps(generate(params(T=500))) != dumps(generate(params(T=500, seed=8)))


def test_frozen_graph_cannot_grow():
    g = generate(params(T=5))
    with pytest.raises(ValueError):
        step(g, g.params, random.Random(0))


def test_degree_law_large_run():
    p = params(m=10, T=20_000, p=0.3, u=5, v=9, holdout_steps=0)
    g = generate(p)
    eta = p.eta
    assert sum(g.user_degrees) / g.n_users == pytest.approx(eta / p.p, rel=0.05)
    assert sum(g.item_degrees) / g.n_items == pytest.approx(eta / (1 - p.p), rel=0.05)


# preferential draw and bounce -------------------------------------------------


def _grown(edges, n_users, n_items):
    g = Bigraph(GeneratorParams())
    for _ in range(n_users):
        g._add_node(USER)
    for _ in range(n_items):
        g._add_node(ITEM)
    for a, c in edges:
        g._add_edge(a, c, 1)
    return g


def test_preferential_frequency_matches_degree():
    # item 0 has degree 1, item 1 has degree 3
    g = _grown([(0, 0), (0, 1), (1, 1), (2, 1)], 3, 2)
    rng = random.Random(11)
    counts = Counter(preferential_draw(g, ITEM, set(), rng)[0] for _ in range(10_000))
    assert counts[1] / 10_000 == pytest.approx(0.75, abs=0.02)


def test_preferential_draw_falls_back_when_saturated():
    g = _grown([(0, 0), (0, 1)], 1, 3)
    node, fell_back = preferential_draw(g, ITEM, {0, 1}, random.Random(0))
    assert (node, fell_back) == (2, True)
    assert MAX_REDRAWS > 0


def test_bounce_single_path_lands_on_second_item():
    # new user 1 joined to item 0; item 0's other neighbor user 0 rates items 0 and 1
    g = _grown([(0, 0), (0, 1), (1, 0)], 2, 2)
    for seed in range(20):
        assert bounce(g, 1, random.Random(seed), USER, {0}) == (1, False)


def test_bounce_without_edges_falls_back():
    g = _grown([(0, 0)], 2, 1)
    assert bounce(g, 1, random.Random(0), USER, set()).fallback


def test_bounce_dead_end_at_second_step_falls_back():
    # new user 1 joined to item 0, which has no other neighbor
    g = _grown([(1, 0), (0, 1)], 2, 2)
    target, fallback = bounce(g, 1, random.Random(0), USER, {0})
    assert fallback and target == 1


def test_bounce_works_for_items_too():
    # new item 1 joined to user 0; user 0's other item 0 has users 0 and 1
    g = _grown([(0, 0), (1, 0), (0, 1)], 2, 2)
    assert bounce(g, 1, random.Random(3), ITEM, {0}) == (1, False)


def test_bounce_raises_clustering_mechanism_usage():
    g = generate(params(T=500, alpha=1.0, beta=1.0, b=1.0))
    attempts = sum(t.bounce_attempts for t in g.trace)
    assert attempts == sum(t.preferential for t in g.trace)
    assert sum(t.bounced for t in g.trace) > 0.5 * attempts

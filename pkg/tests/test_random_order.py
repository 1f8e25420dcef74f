import numpy as np
import pytest

from sketchfactor.harness import gen_planted
from sketchfactor.solvers.oracles import lloyd
from sketchfactor.solvers.ptas import ptas_kmeans
from sketchfactor.solvers.random_order import prefix_size, random_order_kmeans, sensitivity_upper_bounds


@pytest.fixture(scope="module")
def planted():
    A, _ = gen_planted("kmeans", 2000, 4, 3, sigma=1.0, seed=0)
    return np.asarray(A)


def stream(a, order):
    return ((int(i), a[i]) for i in order)


def test_prefix_size():
    assert prefix_size(2000, 4, 3, 0.5, 0.01) == 2000
    assert prefix_size(2000, 4, 3, 0.5, 0.01, c3=0.5) == 480


def test_full_prefix_equals_offline():
    a, _ = gen_planted("kmeans", 60, 3, 2, sigma=1.0, seed=1)
    a = np.asarray(a)
    order = np.random.default_rng(0).permutation(60)
    pair = random_order_kmeans(stream(a, order), 60, 3, 2, 0.5, 1.0, seed=4)
    offline = ptas_kmeans(a, 2, 0.5, seed=4)
    assert pair.info["prefix"] == 60
    assert pair.cost == pytest.approx(offline.cost, rel=1e-12)
    np.testing.assert_allclose(pair.D, offline.D)


@pytest.mark.parametrize("c3", [4.0, 0.5])
def test_planted_shuffles(planted, c3):
    offline = lloyd(planted, 3, seed=0).cost
    hits = 0
    for s in range(20):
        order = np.random.default_rng(s).permutation(2000)
        pair = random_order_kmeans(stream(planted, order), 2000, 4, 3, 0.5, 20 / 2000, c3=c3, seed=s)
        info = pair.info
        assert info["peak_words"] <= info["bound_words"] + info["prefix"] + 4
        hits += pair.cost <= 1.5 * offline
    assert hits >= 16


def test_sorted_order_keeps_memory_bound(planted):
    order = np.argsort(planted[:, 0])
    pair = random_order_kmeans(stream(planted, order), 2000, 4, 3, 0.5, 20 / 2000, c3=0.1, solver="lloyd")
    info = pair.info
    assert info["peak_words"] <= info["bound_words"] + info["prefix"] + 4


def test_cost_accumulated_online_matches_recomputation(planted):
    order = np.random.default_rng(3).permutation(2000)
    pair = random_order_kmeans(stream(planted, order), 2000, 4, 3, 0.5, 0.01, c3=0.1)
    R = pair.X @ pair.D - planted
    assert pair.cost == pytest.approx(float(np.sum(R * R)), rel=1e-9)


def test_emit_once_per_row():
    a = np.random.default_rng(4).normal(size=(40, 2))
    seen = []
    random_order_kmeans(stream(a, range(40)), 40, 2, 2, 0.5, 0.1, c3=0.5, solver="lloyd",
                        emit=lambda i, j: seen.append(i))
    assert sorted(seen) == list(range(40))


def test_stream_errors():
    a = np.zeros((5, 2))
    with pytest.raises(ValueError):
        random_order_kmeans(stream(a, range(4)), 5, 2, 1, 0.5, 1.0)
    with pytest.raises(ValueError):
        random_order_kmeans(stream(a, [0, 1, 1, 2, 3]), 5, 2, 1, 0.5, 1.0)
    with pytest.raises(ValueError):
        random_order_kmeans(stream(a, range(5)), 5, 2, 1, 0.5, 0.0)
    with pytest.raises(ValueError):
        random_order_kmeans(stream(a, range(5)), 5, 2, 1, 0.5, 1.0, solver="magic")


def test_sensitivity_identical_rows():
    sigma, total = sensitivity_upper_bounds(np.ones((20, 3)), 1)
    np.testing.assert_allclose(sigma, np.full(20, 8 / 20))
    assert total == pytest.approx(8.0)


def test_sensitivity_dominates_grid_sup():
    a = np.array([[0.0], [0.5], [1.1], [3.0], [3.2], [7.0]])
    sigma, _ = sensitivity_upper_bounds(a, 1)
    grid = np.arange(a.min(), a.max() + 0.005, 0.01)
    d2 = (a - grid[None, :]) ** 2
    sup = np.max(d2 / d2.sum(axis=0), axis=1)
    assert np.all(sigma >= sup)


def test_sensitivity_outlier():
    rng = np.random.default_rng(5)
    a = np.vstack([rng.normal(size=(50, 2)), [[1000.0, 1000.0]]])
    sigma, _ = sensitivity_upper_bounds(a, 1)
    assert sigma[-1] == pytest.approx(1.0)
    assert np.median(sigma[:-1]) < 0.5

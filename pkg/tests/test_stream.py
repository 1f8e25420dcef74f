import numpy as np
import pytest

from sketchfactor.stream import (
    SketchSizes,
    SketchState,
    TurnstileUpdate,
    matrix_to_updates,
    read_rows,
    read_turnstile,
    write_rows,
    write_turnstile,
)

ALL_KINDS = ("Sign", "Gaussian", "CountSketch")


def state(n=4, d=2, s=3, t=5, w=7, seed=0, **kw):
    return SketchState.create(n, d, s, t, w, seed, **kw)


def assert_matches(st, A, tol=1e-9):
    SA, AT, WA = st.dense_products(A)
    for got, ref in ((st.SA, SA), (st.AT, AT), (st.WvecA, WA)):
        scale = max(1.0, np.abs(ref).max())
        assert np.abs(got - ref).max() <= tol * scale


def test_cancellation_returns_to_zero():
    st = state()
    st.ingest_turnstile(TurnstileUpdate(0, 0, 1.0))
    st.ingest_turnstile(TurnstileUpdate(0, 0, -1.0))
    for acc in (st.SA, st.AT, st.WvecA):
        assert np.abs(acc).max() <= 1e-12


def test_known_matrix_through_updates():
    A = np.array([[1.0, 2.0], [0.0, -1.0], [3.5, 0.0], [-2.0, 4.0]])
    st = state()
    for u in matrix_to_updates(A):
        st.ingest_turnstile(u)
    assert_matches(st, A)


def test_zero_delta_only_counts():
    st = state()
    st.ingest_turnstile(TurnstileUpdate(1, 1, 0.0))
    assert st.update_count == 1
    assert not st.SA.any() and not st.AT.any() and not st.WvecA.any()


def test_out_of_range_update_leaves_state():
    st = state()
    st.ingest_turnstile(TurnstileUpdate(1, 0, 2.0))
    before = (st.SA.copy(), st.AT.copy(), st.WvecA.copy(), st.update_count)
    for bad in ((4, 0), (0, 2), (-1, 0)):
        with pytest.raises(IndexError):
            st.ingest_turnstile(TurnstileUpdate(*bad, 1.0))
    after = (st.SA, st.AT, st.WvecA, st.update_count)
    for x, y in zip(before, after):
        assert np.array_equal(x, y)


def test_zero_row():
    st = state()
    st.ingest_row(2, np.zeros(2))
    assert not st.SA.any() and not st.AT.any() and not st.WvecA.any()


@pytest.mark.parametrize("chunk", [1, 2, 32])
def test_rows_match_turnstile(chunk):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(9, 5))
    a = state(9, 5, 4, 6, 11, seed=3, row_chunk=chunk)
    b = state(9, 5, 4, 6, 11, seed=3)
    for i in range(9):
        a.ingest_row(i, A[i])
    for u in matrix_to_updates(A, rng, split=3):
        b.ingest_turnstile(u)
    for x, y in ((a.SA, b.SA), (a.AT, b.AT), (a.WvecA, b.WvecA)):
        np.testing.assert_allclose(x, y, atol=1e-9)


def test_row_arrival_order_irrelevant():
    A = np.random.default_rng(1).normal(size=(6, 3))
    a, b = state(6, 3, seed=4), state(6, 3, seed=4)
    for i in range(6):
        a.ingest_row(i, A[i])
    for i in np.random.default_rng(2).permutation(6):
        b.ingest_row(int(i), A[i])
    np.testing.assert_allclose(a.SA, b.SA, atol=1e-12)
    np.testing.assert_allclose(a.AT, b.AT, atol=1e-12)
    np.testing.assert_allclose(a.WvecA, b.WvecA, atol=1e-12)


@pytest.mark.parametrize("kinds", [("Sign",) * 3, ALL_KINDS])
def test_random_sequences_match_dense(kinds):
    rng = np.random.default_rng(5)
    for trial in range(50):
        n, d = rng.integers(1, 17, size=2)
        st = SketchState.create(int(n), int(d), 3, 4, 5, seed=trial, kinds=kinds)
        A = np.zeros((n, d))
        for _ in range(rng.integers(1, 60)):
            i, j, delta = int(rng.integers(n)), int(rng.integers(d)), float(rng.normal())
            A[i, j] += delta
            st.ingest_turnstile(TurnstileUpdate(i, j, delta))
        assert_matches(st, A)


def test_update_order_invariance():
    rng = np.random.default_rng(6)
    ups = [TurnstileUpdate(int(rng.integers(5)), int(rng.integers(4)), float(rng.normal())) for _ in range(80)]
    a, b = state(5, 4, seed=1), state(5, 4, seed=1)
    for u in ups:
        a.ingest_turnstile(u)
    for p in rng.permutation(len(ups)):
        b.ingest_turnstile(ups[p])
    for x, y in ((a.SA, b.SA), (a.AT, b.AT), (a.WvecA, b.WvecA)):
        assert np.abs(x - y).max() <= 1e-9 * max(1.0, np.abs(x).max())


def test_resident_words_formula():
    st = state(100, 50, 10, 8, 64)
    assert st.space_report()["resident_words"] == 1364
    st.ingest_row(0, np.ones(50))
    assert st.space_report()["resident_words"] == 1364
    assert st.space_report()["update_count"] == 1
    assert state(200, 50, 10, 8, 64).resident_words == 1364 + 100 * 8


def test_strict_rows_reject_repeats():
    st = state(strict_rows=True)
    st.ingest_row(1, [1.0, 2.0])
    with pytest.raises(ValueError):
        st.ingest_row(1, [1.0, 2.0])
    state().ingest_row(1, [1.0, 2.0]).ingest_row(1, [1.0, 2.0])


def test_peak_within_bound():
    rng = np.random.default_rng(7)
    st = state(10, 40, 3, 4, 5, strict_rows=True, row_chunk=8)
    for i in range(10):
        st.ingest_row(i, rng.normal(size=40))
    bound = st.resident_words + st.scratch_bound() + (10 + 63) // 64
    assert st.resident_words < st.peak_words <= bound
    tst = state(10, 40, 3, 4, 5)
    for u in matrix_to_updates(rng.normal(size=(10, 40))):
        tst.ingest_turnstile(u)
    assert tst.peak_words == tst.resident_words + 3 + 4 + 5


def test_sketch_sizes():
    z = SketchSizes.for_kmeans(8, 2, 0.5)
    assert (z.s, z.t, z.w) == (16, 89, 267)


def test_turnstile_file_round_trip(tmp_path):
    ups = [TurnstileUpdate(0, 1, 2.5), TurnstileUpdate(3, 0, -1e-3)]
    path = tmp_path / "t.txt"
    write_turnstile(path, 4, 2, ups)
    assert path.read_text().splitlines()[0] == "turnstile 4 2"
    n, d, it = read_turnstile(path)
    assert (n, d, list(it)) == (4, 2, ups)
    path.write_text("rows 4 2\n")
    with pytest.raises(ValueError):
        read_turnstile(path)


def test_row_file_round_trip_and_shuffle(tmp_path):
    A = np.random.default_rng(8).normal(size=(5, 3))
    path = tmp_path / "r.txt"
    write_rows(path, A)
    n, d, it = read_rows(path)
    got = list(it)
    assert (n, d) == (5, 3) and [i for i, _ in got] == list(range(5))
    np.testing.assert_array_equal(np.array([r for _, r in got]), A)
    order = [i for i, _ in read_rows(path, shuffle_seed=1)[2]]
    assert sorted(order) == list(range(5))
    assert order == [i for i, _ in read_rows(path, shuffle_seed=1)[2]]


def test_short_row_file(tmp_path):
    path = tmp_path / "r.txt"
    path.write_text("rows 3 2\n1 2\n3 4\n")
    with pytest.raises(ValueError):
        read_rows(path)

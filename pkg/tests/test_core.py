import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scbiclust.core import (
    Bicluster,
    ConstantFeature,
    DataMatrix,
    InputError,
    NonNumeric,
    Partition,
    RaggedRows,
    bcss,
    pairwise_bcss,
    read_csv,
    restandardize,
    rng_stream,
    standardize,
    top_features,
    write_csv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_standardize_column_123():
    Z = standardize(np.array([[1.0], [2.0], [3.0]]))
    assert np.allclose(Z.values[:, 0], [-1, 0, 1], atol=1e-15)


def test_standardize_two_columns_equal():
    Z = standardize(np.array([[0.0, 10], [1, 20], [2, 30]])).values
    assert np.allclose(Z[:, 0], [-1, 0, 1]) and np.allclose(Z[:, 1], [-1, 0, 1])


def test_constant_column_raises_with_index():
    X = np.array([[1.0, 5], [2, 5], [3, 5]])
    with pytest.raises(ConstantFeature) as ei:
        standardize(X)
    assert ei.value.j == 1


def test_drop_constant_returns_index_map():
    X = np.array([[5.0, 1, 7], [5, 2, 7], [5, 4, 7]])
    with pytest.warns(UserWarning):
        Z, keep = standardize(X, drop_constant=True)
    assert list(keep) == [1] and Z.p == 1


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(3, 12), st.integers(1, 5)), elements=finite))
def test_standardize_moments(A):
    sd = A.std(axis=0, ddof=1)
    if np.any(sd < 1e-6 * np.maximum(1, np.abs(A).max(axis=0))):
        return
    Z = standardize(A).values
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-12)
    assert np.all(np.abs(Z.std(axis=0, ddof=1) - 1) < 1e-12)


def test_restandardize_zero_column_stays_zero():
    A = np.array([[1.0, 3], [1, 4], [1, 8]])
    Z = restandardize(A)
    assert np.all(Z[:, 0] == 0) and abs(Z[:, 1].std(ddof=1) - 1) < 1e-12


def test_datamatrix_rejects_nonfinite():
    with pytest.raises(InputError):
        DataMatrix(np.array([[1.0, np.nan], [1, 2]]))


def test_read_csv_header(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("a,b\n1,2\n")
    X = read_csv(f, has_header=True)
    assert X.shape == (1, 2) and X.feature_names == ("a", "b")


def test_read_csv_ragged(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2\n3\n")
    with pytest.raises(RaggedRows) as ei:
        read_csv(f)
    assert ei.value.line == 2


def test_read_csv_nonnumeric(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,x\n")
    with pytest.raises(NonNumeric) as ei:
        read_csv(f)
    assert (ei.value.line, ei.value.field) == (1, 2)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_csv_round_trip_bit_exact(tmp_path_factory, A):
    f = tmp_path_factory.mktemp("rt") / "m.csv"
    write_csv(f, A)
    B = read_csv(f).values
    assert np.array_equal(A.view(np.int64), B.view(np.int64))


def test_partition_invariants():
    with pytest.raises(ValueError):
        Partition(np.array([1, 1, 1]))
    with pytest.raises(ValueError):
        Partition(np.array([1, 3, 2]))
    part = Partition(np.array([2, 1, 2, 2]))
    assert (part.n1, part.n2) == (1, 3)


def test_smaller_cluster_and_tie_rule():
    assert list(Partition(np.array([1, 2, 2, 2, 1])).smaller()) == [0, 4]
    # equal sizes: the cluster holding row 0
    assert list(Partition(np.array([2, 1, 1, 2])).smaller()) == [0, 3]


def test_top_features_ties_lowest_index():
    w = np.array([0.5, 0.1, 0.5, 0.5, 0.2])
    assert list(top_features(w, 2)) == [0, 2]


def test_bicluster_round_trip():
    U = Bicluster([3, 1], [2, 0], "mean", np.array([0.6, 0.0, 0.8]), 0.4, 1e-5, 2)
    V = Bicluster.from_dict(U.to_dict())
    assert list(V.rows) == [1, 3] and list(V.cols) == [0, 2] and V.to_dict() == U.to_dict()


def test_rng_stream_reproducible_and_distinct():
    a = rng_stream(5, 1, 2).standard_normal(4)
    assert np.array_equal(a, rng_stream(5, 1, 2).standard_normal(4))
    assert not np.array_equal(a, rng_stream(5, 1, 3).standard_normal(4))
    assert not np.array_equal(a, rng_stream(6, 1, 2).standard_normal(4))


def test_bcss_two_point_pairwise_and_centroid():
    # ordered-pair form: (1/2)(4 + 4) - 0 = 4; centroid form is half of it
    X = np.array([[0.0], [2.0]])
    part = Partition(np.array([1, 2]))
    assert pairwise_bcss(X, part)[0] == pytest.approx(4.0)
    assert bcss(X, part)[0] == pytest.approx(2.0)


def test_bcss_four_points_brute_force():
    X = np.array([[-1.0], [-1], [1], [1]])
    part = Partition(np.array([1, 1, 2, 2]))
    # hand oracle: total ordered-pair sum 8*4=32 -> 32/4 = 8; within sums 0 -> pairwise 8
    assert pairwise_bcss(X, part)[0] == pytest.approx(8.0)
    assert bcss(X, part)[0] == pytest.approx(4.0)


def test_bcss_identical_clusters_zero():
    X = np.array([[1.0, 2], [3, 2], [1, 2], [3, 2]])
    assert np.allclose(bcss(X, Partition(np.array([1, 1, 2, 2]))), 0.0)


def test_bcss_forms_agree_1000_instances():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        n, p = int(rng.integers(2, 12)), int(rng.integers(1, 5))
        X = rng.normal(size=(n, p)) * rng.uniform(0.1, 10)
        lab = rng.integers(1, 3, n)
        lab[0], lab[-1] = 1, 2
        part = Partition(lab)
        worst = max(worst, np.max(np.abs(pairwise_bcss(X, part) - 2 * bcss(X, part))))
    assert worst <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10).flatmap(
    lambda n: st.tuples(arrays(float, (n, 3), elements=finite),
                        st.lists(st.integers(1, 2), min_size=n, max_size=n))))
def test_bcss_relabel_and_within_permutation(args):
    X, lab = args
    lab = np.array(lab)
    if len(set(lab)) < 2:
        return
    part = Partition(lab)
    b = bcss(X, part)
    assert np.all(b >= 0)
    assert np.allclose(bcss(X, Partition(3 - lab)), b, atol=1e-9 * (1 + b.max()))
    idx = np.flatnonzero(lab == 1)
    perm = np.arange(len(lab))
    perm[idx] = idx[::-1]
    assert np.allclose(bcss(X[perm], part), b, atol=1e-9 * (1 + b.max()))


def test_bcss_null_mean_is_one():
    rng = np.random.default_rng(1)
    lab = np.where(np.arange(100) < 37, 1, 2)
    part = Partition(lab)
    vals = [bcss(standardize(rng.standard_normal((100, 1))), part)[0] for _ in range(2000)]
    assert abs(np.mean(vals) - 1) < 0.1


def test_exhaustive_small_partitions_agree():
    X = np.random.default_rng(2).normal(size=(5, 2))
    for labs in itertools.product((1, 2), repeat=5):
        if len(set(labs)) < 2:
            continue
        part = Partition(np.array(labs))
        assert np.allclose(pairwise_bcss(X, part), 2 * bcss(X, part), atol=1e-12)

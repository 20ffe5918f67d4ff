import csv
import io

import numpy as np
import pytest

from scbiclust.core import Bicluster, rng_stream
from scbiclust.simulation import (
    CSV_COLUMNS,
    SCENARIOS,
    bench,
    from_one_based,
    generate,
    identify,
    reproducibility,
    score,
)


def _as_bic(block, kind="mean"):
    return Bicluster(block.row_index, block.col_index, kind, np.zeros(1), 0.0, 0.0, 1)


def test_one_based_conversion():
    assert from_one_based(1, 20) == (0, 20)
    assert from_one_based(51, 90) == (50, 90)
    assert list(range(*from_one_based(16, 30)))[0] == 15
    with pytest.raises(ValueError):
        from_one_based(0, 5)


def test_scenario_coordinates():
    s1 = SCENARIOS[1]
    assert s1.block("bic3").rows == (50, 90) and s1.block("bic3").cols == (60, 130)
    assert SCENARIOS[4].block("bic1").rows == (0, 500)
    assert SCENARIOS[5].block("bic2").cols == (200, 400)
    for s in SCENARIOS.values():
        for b in s.blocks:
            assert 0 <= b.rows[0] < b.rows[1] <= s.n and 0 <= b.cols[0] < b.cols[1] <= s.p


@pytest.mark.parametrize("sid,shape", [(1, (100, 200)), (2, (100, 200)), (3, (100, 200)),
                                       (4, (1200, 75)), (5, (150, 500))])
def test_generate_shape_and_determinism(sid, shape):
    a = generate(sid, rng_stream(70, sid)).data.values
    b = generate(sid, rng_stream(70, sid)).data.values
    assert a.shape == shape and np.array_equal(a, b)


def test_scenario_one_entry_means():
    v = np.array([generate(1, rng_stream(71, r)).data.values[[59, 0], [99, 99]] for r in range(500)])
    # 1-based (60, 100) lies in the third block, (1, 100) in background only
    assert abs(v[:, 0].mean() - 3) < 0.2 and abs(v[:, 1].mean()) < 0.15


def test_scenario_four_noise_column():
    c = np.concatenate([generate(4, rng_stream(72, r)).data.values[:, 50] for r in range(20)])
    assert abs(c.mean()) < 0.03 and abs(c.std() - 1) < 0.03


def test_scenario_four_paired_columns():
    X = generate(4, rng_stream(73)).data.values
    assert np.array_equal(X[:, 0], X[:, 2]) and np.array_equal(X[:, 1], X[:, 49])
    # both coordinates carry the same per-row noise, so the first cluster
    # lies on a radius-5 circle around (5, -2)
    r = np.hypot(X[:500, 0] - 5, X[:500, 1] + 2)
    assert abs(np.median(r) - 5) < 0.3


def test_scenario_five_block_spread():
    sds = [generate(5, rng_stream(74, r)).data.values[:30, :200].std() for r in range(500)]
    assert abs(np.mean(sds) - 15) < 0.5


def test_scenario_three_layers_sum():
    X = np.array([generate(3, rng_stream(75, r)).data.values for r in range(100)])
    # overlap of the two blocks: 7 - 5; block 1 only: 7 + background 0
    assert abs(X[:, 30, 30].mean() - 2) < 0.8 and abs(X[:, 5, 5].mean() - 7) < 0.4


@pytest.mark.parametrize("sid", sorted(SCENARIOS))
def test_score_truth_all_zero(sid):
    s = SCENARIOS[sid]
    for b in s.blocks:
        rep = score(_as_bic(b), s, b.name)
        assert (rep.obs_misclass, rep.feature_fnr, rep.feature_fpr, rep.entry_fnr, rep.entry_fpr) == (0, 0, 0, 0, 0)
        assert rep.valid and rep.identification == b.name


def test_score_complement_rows():
    s = SCENARIOS[1]
    b = s.block("bic3")
    rows = np.setdiff1d(np.arange(s.n), b.row_index)
    U = Bicluster(rows, b.col_index, "mean", np.zeros(1), 0.0, 0.0, 1)
    assert score(U, s).obs_misclass == pytest.approx((b.row_index.size + rows.size) / s.n)


def test_identify_bic1_plus_2_and_none():
    s = SCENARIOS[3]
    assert identify(_as_bic(s.block("bic1+2")), s) == "bic1+2"
    far = Bicluster([98, 99], [198, 199], "mean", np.zeros(1), 0.0, 0.0, 1)
    assert identify(far, s) == "none"


def test_identification_ignores_layer_order():
    s = SCENARIOS[3]
    layers = [_as_bic(s.block("bic2")), _as_bic(s.block("bic1"))]
    assert [identify(U, s) for U in layers] == [identify(U, s) for U in layers[::-1]][::-1]


def test_valid_flag():
    U = Bicluster([1], [2, 3], "mean", np.zeros(1), 0.0, 0.0, 1)
    assert not score(U, SCENARIOS[1]).valid


def test_reproducibility_fixed_columns():
    def fit(X, rng):
        return Bicluster([0, 1], [3, 4, 5], "mean", np.zeros(1), 0.0, 0.0, 3)

    rep = reproducibility(rng_stream(76).standard_normal((20, 10)), fit, 5, rng_stream(77))
    assert rep.feature_misclass == 0 and rep.feature_fnr == 0 and rep.feature_fpr == 0
    assert rep.splits == 5 and rep.failed_fits == 0


def test_reproducibility_failed_fits_are_worst_case():
    rep = reproducibility(np.zeros((10, 3)), lambda X, rng: None, 3, rng_stream(78))
    assert rep.obs_misclass == rep.feature_misclass == 1.0 and rep.failed_fits == 7


def test_reproducibility_needs_eight_rows():
    with pytest.raises(ValueError):
        reproducibility(np.zeros((6, 3)), lambda X, rng: None)


def test_bench_csv_schema_and_thread_invariance():
    a = bench([3], replicates=2, seed=5, threads=1, max_layers=3)
    b = bench([3], replicates=2, seed=5, threads=2, max_layers=3)
    rows = list(csv.DictReader(io.StringIO(a.to_csv())))
    assert tuple(rows[0]) == ("replicate",) + CSV_COLUMNS
    strip = [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]
    other = [{k: v for k, v in r.items() if k != "wall_ms"} for r in csv.DictReader(io.StringIO(b.to_csv()))]
    assert strip == other and a.layer_counts == b.layer_counts
    s = a.summary()[0]
    assert s["replicates"] == 2 and sum(s["layer_hist"].values()) == 2
    assert "stop@2" in a.summary_table()


def test_bench_single_replicate_single_row():
    # a scenario-1 fit always finds layers, so one replicate gives one row per layer
    res = bench([1], replicates=1, seed=1, max_layers=1)
    assert len(res.rows) == 1 and res.rows[0]["layer"] == 1


def test_bench_unknown_scenario():
    with pytest.raises(KeyError):
        bench([9], replicates=1)

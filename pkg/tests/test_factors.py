import datetime as dt
import io
import itertools

import numpy as np
import pytest

from multicg.corpus import (DailySeries, EntityCatalog, MarketSeries,
                            MentionSetTable, TimeWindow, load_catalog,
                            load_market_series, parse_mention_corpus)
from multicg.exceptions import InputError
from multicg.factors import (CorrelationMatrix, GraphSet,
                             build_cooccurrence_graph, build_factor_set,
                             build_ground_truth, build_lagged_graph,
                             build_volume_graph, factor_from_stem, factor_ids,
                             file_stem, read_matrix, write_matrix)
from multicg.series import apply_lag, log_returns, sma_smooth
from oracles import jaccard, pearson_direct

WIN = TimeWindow.parse("2012-10-01", "2012-10-20")


def _series(rng, symbols=("A", "B", "C", "D"), kind="tweet"):
    return {s: DailySeries(s, kind, WIN, rng.poisson(3, WIN.length)) for s in symbols}


def test_factor_ids_and_stems():
    ids = factor_ids((-2, -1, 1, 2))
    assert ids == ["t", "r", "t(-2)", "t(-1)", "t(+1)", "t(+2)",
                   "r(-2)", "r(-1)", "r(+1)", "r(+2)", "ct", "cr"]
    assert file_stem("t(-2)") == "t_m2"
    assert file_stem("r(+1)") == "r_p1"
    assert [factor_from_stem(file_stem(f)) for f in ids] == ids
    with pytest.raises(InputError):
        factor_ids((0, 1))


def test_volume_graph_matches_oracle():
    rng = np.random.default_rng(1)
    series = _series(rng)
    g = build_volume_graph(series, 3)
    g.validate()
    sm = {s: list(sma_smooth(v.values, 3)) for s, v in series.items()}
    for (i, a), (j, b) in itertools.combinations(enumerate(g.order), 2):
        assert g.values[i, j] == pytest.approx(pearson_direct(sm[a], sm[b]), abs=1e-12)
    assert g.factor == "t"


def test_lagged_graph_matches_oracle_and_sign_symmetry():
    rng = np.random.default_rng(2)
    series = _series(rng)
    plus = build_lagged_graph(series, 3, 2)
    minus = build_lagged_graph(series, 3, -2)
    plus.validate()
    assert plus.factor == "t(+2)" and minus.factor == "t(-2)"
    np.testing.assert_allclose(plus.values, minus.values, atol=1e-15)
    sm = {s: sma_smooth(v.values, 3) for s, v in series.items()}
    a, b = plus.order[0], plus.order[1]
    s_ab = pearson_direct(*map(list, apply_lag(sm[a], sm[b], 2)))
    s_ba = pearson_direct(*map(list, apply_lag(sm[b], sm[a], 2)))
    assert plus.values[0, 1] == pytest.approx((s_ab + s_ba) / 2, abs=1e-12)


def test_undefined_pairs_are_zero_and_counted():
    series = {
        "A": DailySeries("A", "tweet", WIN, np.zeros(WIN.length)),
        "B": DailySeries("B", "tweet", WIN, np.arange(WIN.length)),
        "C": DailySeries("C", "tweet", WIN, np.arange(WIN.length) % 3),
    }
    g = build_volume_graph(series, None)
    assert g.undefined == 2
    assert g.values[0, 1] == 0 and g.values[0, 2] == 0
    assert g.values[0, 0] == 1


def test_scaling_counts_leaves_volume_graphs_unchanged():
    rng = np.random.default_rng(3)
    series = _series(rng)
    scaled = {s: DailySeries(s, v.kind, v.window, 3 * v.values) for s, v in series.items()}
    np.testing.assert_allclose(build_volume_graph(series).values,
                               build_volume_graph(scaled).values, atol=1e-10)
    np.testing.assert_allclose(build_lagged_graph(series, 10, 1).values,
                               build_lagged_graph(scaled, 10, 1).values, atol=1e-10)


def test_cooccurrence_matches_set_oracle():
    sets = {"A": frozenset({"1", "2", "3"}), "B": frozenset({"2", "3", "4"}),
            "C": frozenset(), "D": frozenset({"9"})}
    g = build_cooccurrence_graph(MentionSetTable("tweet", WIN, sets))
    g.validate()
    for (i, a), (j, b) in itertools.product(enumerate(g.order), repeat=2):
        if i != j:
            assert g.values[i, j] == jaccard(sets[a], sets[b])
    assert g.values[0, 1] == 0.5
    assert list(np.diag(g.values)) == [1, 1, 0, 1]
    assert g.undefined == 0
    empty = build_cooccurrence_graph(MentionSetTable("retweet", WIN, {"A": frozenset(),
                                                                      "B": frozenset()}))
    assert empty.factor == "cr" and empty.undefined == 1


def test_matrix_file_round_trip():
    rng = np.random.default_rng(4)
    a = rng.uniform(-1, 1, (5, 5))
    m = CorrelationMatrix("x", ("A", "B", "C", "D", "E"), (a + a.T) / 2)
    buf = io.StringIO()
    write_matrix(m, buf)
    back = read_matrix(io.StringIO(buf.getvalue()), "x")
    assert back.order == m.order
    np.testing.assert_allclose(back.values, m.values, rtol=1e-9, atol=1e-10)
    assert buf.getvalue().splitlines()[0] == ",A,B,C,D,E"


def test_read_matrix_rejects_label_mismatch():
    with pytest.raises(InputError):
        read_matrix(io.StringIO(",A,B\nA,1,0\nC,0,1\n"))


def test_matrix_invariants_rejected():
    with pytest.raises(InputError):
        CorrelationMatrix("x", ("A", "B"), [[1, 0.5], [0.4, 1]], kind="pearson").validate()
    with pytest.raises(InputError):
        CorrelationMatrix("x", ("A", "B"), [[1, 2], [2, 1]], kind="pearson").validate()
    with pytest.raises(InputError):
        CorrelationMatrix("x", ("A", "B"), [[0.5, 0], [0, 1]], kind="jaccard").validate()
    with pytest.raises(InputError):
        GraphSet((CorrelationMatrix("x", ("A", "B"), np.eye(2)),
                  CorrelationMatrix("y", ("B", "A"), np.eye(2))))


def test_fixture_factor_set(fixture_dir):
    cat = load_catalog(f"{fixture_dir}/catalog.csv")
    corpus = parse_mention_corpus(f"{fixture_dir}/corpus.jsonl", cat)
    win = TimeWindow.parse("2012-10-25", "2012-12-03")
    graphs = build_factor_set(corpus.records, cat, win)
    assert graphs.ids == factor_ids()
    assert graphs.stack().shape == (12, 6, 6)
    for g in graphs:
        g.validate()


def _market(days, rng, symbols=("A", "B", "C")):
    out = {}
    for s in symbols:
        close = 50 * np.exp(np.cumsum(rng.normal(0, 0.01, len(days))))
        out[s] = MarketSeries(s, tuple(days), close, rng.uniform(1e5, 2e5, len(days)))
    return out


def test_ground_truth_matches_direct_computation():
    rng = np.random.default_rng(5)
    days = [dt.date(2012, 9, 1) + dt.timedelta(days=i) for i in range(60)]
    market = _market(days, rng)
    win = TimeWindow(days[30], days[59])
    truth = build_ground_truth(market, win, 21)
    for _, m in truth.items():
        m.validate()
    a, b = market["A"], market["B"]
    assert truth.tv.values[0, 1] == pytest.approx(
        pearson_direct(list(a.volume[30:]), list(b.volume[30:])), abs=1e-12)
    ra, rb = log_returns(a.close), log_returns(b.close)
    assert truth.cp.values[0, 1] == pytest.approx(
        pearson_direct(list(ra[29:]), list(rb[29:])), abs=1e-12)
    va = [np.std(ra[d - 21:d], ddof=1) for d in range(30, 60)]
    vb = [np.std(rb[d - 21:d], ddof=1) for d in range(30, 60)]
    assert truth.hv.values[0, 1] == pytest.approx(pearson_direct(va, vb), abs=1e-12)


def test_ground_truth_uses_shared_trading_days():
    rng = np.random.default_rng(6)
    days = [dt.date(2012, 9, 1) + dt.timedelta(days=i) for i in range(60)]
    market = _market(days, rng)
    short = market["C"]
    keep = [i for i in range(60) if i != 45]
    market["C"] = MarketSeries("C", tuple(short.dates[i] for i in keep),
                               short.close[keep], short.volume[keep])
    truth = build_ground_truth(market, TimeWindow(days[30], days[59]))
    a, b = market["A"], market["B"]
    idx = [i for i in range(30, 60) if i != 45]
    assert truth.tv.values[0, 1] == pytest.approx(
        pearson_direct(list(a.volume[idx]), list(b.volume[idx])), abs=1e-12)


def test_ground_truth_needs_history():
    rng = np.random.default_rng(7)
    days = [dt.date(2012, 9, 1) + dt.timedelta(days=i) for i in range(40)]
    with pytest.raises(InputError, match="insufficient history"):
        build_ground_truth(_market(days, rng), TimeWindow(days[10], days[39]))
    with pytest.raises(InputError, match="Z"):
        build_ground_truth(_market(days, rng), TimeWindow(days[30], days[39]),
                           order=["A", "Z"])

import csv
import math

import numpy as np
import pytest

from rxsim.metrics import (
    PairRecord,
    build_report,
    diagnostic_sort,
    mse,
    pearson,
    pearson_detailed,
    write_plot_tsv,
    write_report_csv,
)


def _pearson_oracle(x, y):
    """Pure-python direct-formula Pearson with compensated summation."""
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def test_pearson_matches_direct_formula():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 200))
        x = rng.uniform(-10, 10, size=n)
        y = rng.uniform(-10, 10, size=n) + 0.3 * x
        if np.all(x == x[0]) or np.all(y == y[0]):
            continue
        assert abs(pearson(x, y) - _pearson_oracle(list(x), list(y))) < 1e-12


def test_pearson_known_values():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)
    assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-12


def test_pearson_affine_invariance_and_antisymmetry():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 5, size=60)
    y = rng.uniform(0, 5, size=60)
    base = pearson(x, y)
    assert pearson(3.0 * x + 7.0, y) == pytest.approx(base, abs=1e-12)
    assert pearson(x, 0.25 * y - 2.0) == pytest.approx(base, abs=1e-12)
    assert pearson(-x, y) == pytest.approx(-base, abs=1e-12)


def test_pearson_degenerate_inputs():
    res = pearson_detailed([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    assert res.r == 0.0 and res.degenerate
    res = pearson_detailed([1.0, 2.0], [5.0, 5.0])
    assert res.r == 0.0 and res.degenerate
    ok = pearson_detailed([1.0, 2.0], [2.0, 5.0])
    assert not ok.degenerate


def test_pearson_validation():
    with pytest.raises(ValueError):
        pearson([1.0], [2.0])
    with pytest.raises(ValueError):
        pearson([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        pearson(np.ones((2, 2)), np.ones((2, 2)))


def test_mse():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([0.0, 0.0], [3.0, 4.0]) == 12.5
    with pytest.raises(ValueError):
        mse([1.0], [1.0, 2.0])


def _records():
    # |f_B - y| - |f_A - y|: r1 -> -1 (backbone better), r2 -> +1, r3 -> 0
    return [
        PairRecord("r2", gold=3.0, backbone=1.0, gcn=2.0),
        PairRecord("r1", gold=3.0, backbone=3.0, gcn=4.0),
        PairRecord("r3", gold=3.0, backbone=2.0, gcn=4.0),
    ]


def test_diagnostic_sort_orders_backbone_better_first():
    assert diagnostic_sort(_records()) == ["r1", "r3", "r2"]


def test_diagnostic_sort_ties_break_by_pair_id():
    records = [
        PairRecord("b", gold=2.0, backbone=2.0, gcn=2.0),
        PairRecord("a", gold=2.0, backbone=2.0, gcn=2.0),
    ]
    assert diagnostic_sort(records) == ["a", "b"]


def test_build_report_per_network():
    records = [
        PairRecord("p0", gold=1.0, backbone=1.0, gcn=0.0),
        PairRecord("p1", gold=2.0, backbone=2.0, gcn=1.5),
        PairRecord("p2", gold=3.0, backbone=3.5, gcn=3.0),
    ]
    rb = build_report(records, "backbone")
    rg = build_report(records, "gcn")
    assert rb.n == 3 and rg.n == 3
    assert rb.pearson_r == pytest.approx(pearson([1, 2, 3], [1, 2, 3.5]))
    assert rg.mse == pytest.approx(np.mean([1.0, 0.25, 0.0]))
    assert rb.per_pair == tuple(records)
    with pytest.raises(ValueError):
        build_report(records, "ensemble")


def test_report_csv_contents(tmp_path):
    report = build_report(_records(), "backbone")
    path = tmp_path / "report.csv"
    write_report_csv(report, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["pair_id", "gold", "backbone", "gcn"]
    assert rows[1] == ["r2", "3.0", "1.0", "2.0"]
    assert len(rows) == 4
    # repr round-trips exactly
    assert float(rows[1][1]) == 3.0


def test_plot_tsv_in_diagnostic_order(tmp_path):
    path = tmp_path / "plot.tsv"
    write_plot_tsv(_records(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index\tpair_id\tgold\tbackbone\tgcn"
    assert [ln.split("\t")[1] for ln in lines[1:]] == ["r1", "r3", "r2"]
    assert lines[1].split("\t")[0] == "0"
    assert lines[1].split("\t")[2] == "3.0"

"""Pearson correlation, MSE and the per-pair diagnostic sort."""

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PearsonResult:
    r: float
    degenerate: bool


@dataclass(frozen=True)
class PairRecord:
    pair_id: str
    gold: float
    backbone: float
    gcn: float


@dataclass(frozen=True)
class EvalReport:
    pearson_r: float
    mse: float
    n: int
    per_pair: tuple
    degenerate: bool = False


def pearson_detailed(x, y) -> PearsonResult:
    """Sample Pearson r; zero variance in either input flags a degenerate 0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two equal-length 1-d sequences")
    if x.size < 2:
        raise ValueError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return PearsonResult(0.0, True)
    r = float(np.dot(dx, dy)) / (sxx ** 0.5 * syy ** 0.5)
    return PearsonResult(r, False)


def pearson(x, y) -> float:
    return pearson_detailed(x, y).r


def mse(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("mse needs equal-length sequences")
    d = x - y
    return float(np.mean(d * d))


def diagnostic_sort(records) -> list:
    """Pair ids ordered by |f_B - y| - |f_A - y| ascending, ties by pair id.

    Backbone-better pairs come first.
    """
    def key(rec: PairRecord):
        return (abs(rec.backbone - rec.gold) - abs(rec.gcn - rec.gold), rec.pair_id)

    return [rec.pair_id for rec in sorted(records, key=key)]


def build_report(records, network: str) -> EvalReport:
    """Evaluation report for one network ('backbone' or 'gcn') over pair records."""
    if network not in ("backbone", "gcn"):
        raise ValueError(f"unknown network {network!r}")
    gold = [r.gold for r in records]
    preds = [getattr(r, network) for r in records]
    res = pearson_detailed(gold, preds)
    return EvalReport(
        pearson_r=res.r,
        mse=mse(gold, preds),
        n=len(records),
        per_pair=tuple(records),
        degenerate=res.degenerate,
    )


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "gold", "backbone", "gcn"])
        for rec in report.per_pair:
            writer.writerow([rec.pair_id, repr(rec.gold), repr(rec.backbone), repr(rec.gcn)])


def write_plot_tsv(records, path) -> None:
    """Diagnostic-sorted plot data: sorted index, gold, backbone, gcn."""
    order = diagnostic_sort(records)
    by_id = {r.pair_id: r for r in records}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index\tpair_id\tgold\tbackbone\tgcn\n")
        for idx, pid in enumerate(order):
            rec = by_id[pid]
            fh.write(f"{idx}\t{pid}\t{rec.gold!r}\t{rec.backbone!r}\t{rec.gcn!r}\n")

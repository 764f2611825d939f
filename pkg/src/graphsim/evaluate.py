"""Query-ranking evaluation, timing benchmarks and CSV reports."""
from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assignment import assignment_ged
from .dataset import Corpus, LabelCache, Split, evaluation_pairs
from .errors import DegenerateInput, Empty, KTooLarge
from .ged import astar_ged, beam_ged, ged_to_similarity
from .graph import Graph
from .metrics import kendall_tau, mse_metric, precision_at_k, rank_order

# Maps a list of graph pairs to predicted similarities.
Scorer = Callable[[Sequence[tuple[Graph, Graph]]], np.ndarray]

REPORT_FIELDS = ("method", "mse_e3", "tau", "p_at_10", "mean_time_ms")
RANKING_FIELDS = ("query_id", "rank", "db_id", "pred_sim", "true_sim", "true_nged")
TIMING_FIELDS = ("method", "pairs", "mean_time_ms", "median_time_ms")


def ged_scorer(ged_fn: Callable[[Graph, Graph], float]) -> Scorer:
    """Turn a GED function into a similarity scorer via ``exp(-nGED)``."""

    def score(pairs):
        return np.array([ged_to_similarity(ged_fn(a, b), a.n, b.n) for a, b in pairs])

    return score


def model_scorer(model, batch_size: int = 256) -> Scorer:
    return lambda pairs: model.predict(list(pairs), batch_size)


def constant_scorer(value: float) -> Scorer:
    return lambda pairs: np.full(len(pairs), float(value))


def truth_scorer(labels: LabelCache) -> Scorer:
    return ged_scorer(lambda a, b: labels.get(a.id, b.id))


def baseline_scorers(beam_width: int = 3) -> dict[str, Scorer]:
    """The non-learned methods, by CLI name."""
    return {
        "astar": ged_scorer(astar_ged),
        "beam": ged_scorer(lambda a, b: beam_ged(a, b, beam_width)),
        "hungarian": ged_scorer(lambda a, b: assignment_ged(a, b, "hungarian")),
        "jonker_volgenant": ged_scorer(lambda a, b: assignment_ged(a, b, "jonker_volgenant")),
    }


@dataclass
class RankingResult:
    query_id: str
    db_ids: list[str]
    pred_sims: list[float]
    true_sims: list[float]
    true_ngeds: list[float]


@dataclass
class MetricsReport:
    method: str
    mse: float
    tau: Optional[float]
    p_at_k: dict[int, Optional[float]] = field(default_factory=dict)
    mean_time_ms: Optional[float] = None

    @property
    def mse_e3(self) -> float:
        return self.mse * 1e3


def _mean_or_none(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def run_eval(
    corpus: Corpus,
    split: Split,
    scorer: Scorer,
    labels: LabelCache,
    method: str = "method",
    ks: Sequence[int] = (10,),
    timing: bool = False,
) -> tuple[MetricsReport, list[RankingResult]]:
    """Score every test query against the whole database and rank.

    Per-query Kendall tau and p@k are macro-averaged; queries on which tau is
    undefined (all scores tied) are left out of the average, and tau is
    ``None`` if that holds for every query. p@k is ``None`` when k exceeds
    the database size.
    """
    pairs = evaluation_pairs(split)
    truth = labels.labeled(corpus, pairs)
    if not pairs:
        raise Empty("no evaluation pairs")
    by_query: dict[str, list[int]] = {}
    for i, (q, _) in enumerate(pairs):
        by_query.setdefault(q, []).append(i)

    pred = np.zeros(len(pairs))
    elapsed = 0.0
    for q, idx in by_query.items():
        graphs = [(corpus[pairs[i][0]], corpus[pairs[i][1]]) for i in idx]
        start = time.perf_counter()
        pred[idx] = scorer(graphs)
        elapsed += time.perf_counter() - start

    true_sims = np.array([lp.sim for lp in truth])
    taus, precisions = [], {k: [] for k in ks}
    rankings = []
    for q, idx in by_query.items():
        db_ids = [pairs[i][1] for i in idx]
        p, t = pred[idx], true_sims[idx]
        try:
            taus.append(kendall_tau(p, t))
        except DegenerateInput:
            pass
        for k in ks:
            try:
                precisions[k].append(precision_at_k(p, t, k, db_ids))
            except KTooLarge:
                precisions[k].append(None)
        order = rank_order(p, db_ids)
        rankings.append(
            RankingResult(
                q,
                [db_ids[i] for i in order],
                [float(p[i]) for i in order],
                [float(t[i]) for i in order],
                [truth[idx[i]].nged for i in order],
            )
        )
    report = MetricsReport(
        method=method,
        mse=mse_metric(pred, true_sims),
        tau=_mean_or_none(taus),
        p_at_k={k: _mean_or_none(v) for k, v in precisions.items()},
        mean_time_ms=1e3 * elapsed / len(pairs) if timing else None,
    )
    return report, rankings


def benchmark_time(scorers: dict[str, Scorer], pairs: Sequence[tuple[Graph, Graph]]) -> list[dict]:
    """Wall time per pair for each method, in the given method order."""
    if not pairs:
        raise Empty("no pairs to time")
    rows = []
    for name, scorer in scorers.items():
        times = []
        for pair in pairs:
            start = time.perf_counter()
            scorer([pair])
            times.append(1e3 * (time.perf_counter() - start))
        rows.append(
            {
                "method": name,
                "pairs": len(pairs),
                "mean_time_ms": statistics.fmean(times),
                "median_time_ms": statistics.median(times),
            }
        )
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def write_report(path, reports: Sequence[MetricsReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in reports:
            w.writerow([r.method, _fmt(r.mse_e3), _fmt(r.tau), _fmt(r.p_at_k.get(10)), _fmt(r.mean_time_ms)])


def read_report(path) -> list[MetricsReport]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            p10 = _parse_float(row["p_at_10"])
            out.append(
                MetricsReport(
                    method=row["method"],
                    mse=float(row["mse_e3"]) / 1e3,
                    tau=_parse_float(row["tau"]),
                    p_at_k={10: p10},
                    mean_time_ms=_parse_float(row["mean_time_ms"]),
                )
            )
    return out


def write_rankings(path, rankings: Sequence[RankingResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RANKING_FIELDS)
        for r in rankings:
            for rank, row in enumerate(zip(r.db_ids, r.pred_sims, r.true_sims, r.true_ngeds), start=1):
                db_id, p, t, ng = row
                w.writerow([r.query_id, rank, db_id, _fmt(p), _fmt(t), _fmt(ng)])


def write_timing(path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, TIMING_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def write_matrix(path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in matrix:
            w.writerow([repr(float(x)) for x in row])


def read_matrix(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        return np.array([[float(x) for x in row] for row in csv.reader(fh)])


def reports_equal(a: MetricsReport, b: MetricsReport, tol: float = 1e-12) -> bool:
    def close(x, y):
        if x is None or y is None:
            return x is None and y is None
        return math.isclose(x, y, rel_tol=tol, abs_tol=tol)

    return (
        a.method == b.method
        and close(a.mse, b.mse)
        and close(a.tau, b.tau)
        and close(a.p_at_k.get(10), b.p_at_k.get(10))
        and close(a.mean_time_ms, b.mean_time_ms)
    )

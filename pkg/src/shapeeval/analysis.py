"""Run-level aggregation, pairwise comparison, and benchmark reliability."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from shapeeval.dataset import Classification
from shapeeval.errors import EvaluationError, InputError, InputWarning
from shapeeval.metrics import (
    DEFAULT_RECALL_LEVELS,
    FMeasureParams,
    average_precision,
    dcg_curve,
    dcg_summary,
    e_measure,
    pr_curve,
    tier_scores,
)
from shapeeval.runs import GainVector, RankedList, Run, RunMeta, gain_vector

METRICS = ("nn", "first_tier", "second_tier", "e_measure", "dcg", "map")
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class QueryResult:
    query: str
    class_label: str
    values: dict[str, float]


@dataclass(frozen=True)
class RunSummary:
    run_name: str
    nn: float
    first_tier: float
    second_tier: float
    e_measure: float
    dcg: float
    map: float
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)
    query_count: int = 0
    excluded_queries: tuple[str, ...] = ()
    per_query: tuple[QueryResult, ...] = ()
    # mean interpolated precision at recall level, and mean NDCG at each rank
    pr_curve: tuple[tuple[float, float], ...] = ()
    ndcg_curve: tuple[float, ...] = ()
    method_label: str = ""
    meta: RunMeta | None = None

    @classmethod
    def from_scores(cls, run_name: str, scores: Mapping[str, float], method_label: str = ""):
        """Summary built from already-published numbers (no per-query detail)."""
        return cls(run_name, *(float(scores[m]) for m in METRICS), method_label=method_label)

    def scores(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


@dataclass(frozen=True)
class ComparisonReport:
    run_a: str
    run_b: str
    per_metric_delta: dict[str, tuple[float, float, float]]
    per_query_wins: dict[str, tuple[int, int, int]]


@dataclass(frozen=True)
class ReliabilityEstimate:
    metric: str
    subset_sizes: tuple[int, ...]
    swap_rate: dict[int, float]
    trials: int
    seed: int


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _query_values(g: GainVector, database_size: int, params: FMeasureParams) -> dict[str, float]:
    tiers = tier_scores(g)
    return {
        "nn": tiers.nn,
        "first_tier": tiers.first_tier,
        "second_tier": tiers.second_tier,
        "e_measure": e_measure(g, params),
        "dcg": dcg_summary(g, database_size),
        "map": average_precision(g),
    }


def evaluate_run(
    run: Run,
    c: Classification,
    params: FMeasureParams = FMeasureParams(),
    recall_levels: int = DEFAULT_RECALL_LEVELS,
    strict: bool = False,
    curves: bool = True,
) -> RunSummary:
    """Score every classified object as a query and average the results.

    Queries whose class has a single member (R = 0) are excluded with a
    warning. Classified objects missing from the run are scored as empty
    rankings. With ``strict`` set, ranked objects outside the classification
    are an error instead of a warning.
    """
    unknown = [q for q in run.lists if q not in c.entries]
    if unknown:
        raise InputError(f"run {run.name!r}: query {unknown[0]!r} is not in the classification")

    n_objects = len(c.entries)
    depth = n_objects - 1
    results: list[QueryResult] = []
    excluded: list[str] = []
    missing = 0
    pr_sums = None
    ndcg_sums = [0.0] * depth if curves and depth > 0 else None

    for query in c.object_ids:
        lst = run.lists.get(query)
        if lst is None:
            missing += 1
            lst = RankedList(query, ())
        g = gain_vector(lst, c, strict=strict)
        if len(g.gains) > depth:
            raise InputError(f"run {run.name!r}: query {query!r} ranks more objects than exist")
        if g.relevant_total == 0:
            excluded.append(query)
            continue
        results.append(QueryResult(query, c.entries[query], _query_values(g, n_objects, params)))
        if curves:
            interp = pr_curve(g, recall_levels).interpolated
            if pr_sums is None:
                pr_sums = [0.0] * len(interp)
            for k, (_, precision) in enumerate(interp):
                pr_sums[k] += precision
            padded = GainVector(g.gains + (0,) * (depth - len(g.gains)), g.relevant_total)
            for k, value in enumerate(dcg_curve(padded).ndcg):
                ndcg_sums[k] += value

    if missing:
        warnings.warn(
            f"run {run.name!r}: {missing} classified objects have no ranked list; "
            "scored as empty rankings",
            InputWarning,
            stacklevel=2,
        )
    if excluded:
        warnings.warn(
            f"run {run.name!r}: {len(excluded)} queries have no relevant objects and were excluded",
            InputWarning,
            stacklevel=2,
        )
    if not results:
        raise EvaluationError(f"run {run.name!r}: no query has any relevant object")

    aggregates = {m: _mean([r.values[m] for r in results]) for m in METRICS}
    by_class: dict[str, list[QueryResult]] = {}
    for r in results:
        by_class.setdefault(r.class_label, []).append(r)
    per_class = {
        label: {m: _mean([r.values[m] for r in rows]) for m in METRICS}
        for label, rows in by_class.items()
    }

    n = len(results)
    pr_mean = ()
    ndcg_mean = ()
    if curves:
        levels = recall_levels
        pr_mean = tuple((k / levels, total / n) for k, total in enumerate(pr_sums))
        ndcg_mean = tuple(total / n for total in ndcg_sums)

    return RunSummary(
        run.name,
        **aggregates,
        per_class=per_class,
        query_count=n,
        excluded_queries=tuple(excluded),
        per_query=tuple(results),
        pr_curve=pr_mean,
        ndcg_curve=ndcg_mean,
        method_label=run.method_label,
        meta=run.meta,
    )


def _winner(a: float, b: float) -> int:
    """+1 if a is better, -1 if b is better, 0 for a tie."""
    diff = a - b
    if abs(diff) <= TIE_TOLERANCE:
        return 0
    return 1 if diff > 0 else -1


def compare_runs(a: RunSummary, b: RunSummary) -> ComparisonReport:
    """Deltas are ``b - a``; wins are counted per query on each measure."""
    deltas = {m: (getattr(a, m), getattr(b, m), getattr(b, m) - getattr(a, m)) for m in METRICS}

    queries_a = {r.query: r for r in a.per_query}
    queries_b = {r.query: r for r in b.per_query}
    if queries_a.keys() != queries_b.keys():
        only_a = sorted(queries_a.keys() - queries_b.keys())
        only_b = sorted(queries_b.keys() - queries_a.keys())
        example = (only_a or only_b)[0]
        raise InputError(
            f"runs {a.run_name!r} and {b.run_name!r} were evaluated on different query sets "
            f"({len(only_a)} only in the first, {len(only_b)} only in the second; e.g. {example!r})"
        )

    wins = {}
    for m in METRICS:
        tally = [0, 0, 0]
        for q, ra in queries_a.items():
            w = _winner(ra.values[m], queries_b[q].values[m])
            tally[0 if w > 0 else 1 if w < 0 else 2] += 1
        wins[m] = tuple(tally)
    return ComparisonReport(a.run_name, b.run_name, deltas, wins)


def _class_totals(summary: RunSummary, metric: str, labels: Sequence[str]):
    sums = dict.fromkeys(labels, 0.0)
    counts = dict.fromkeys(labels, 0)
    for r in summary.per_query:
        sums[r.class_label] += r.values[metric]
        counts[r.class_label] += 1
    return np.array([sums[k] for k in labels]), np.array([counts[k] for k in labels])


def swap_rates_from_class_totals(
    sums_a: np.ndarray,
    sums_b: np.ndarray,
    counts: np.ndarray,
    subset_sizes: Sequence[int],
    trials: int,
    seed: int,
) -> dict[int, float]:
    """Swap rate per subset size given per-class metric totals for two runs.

    For each trial two disjoint class subsets of the requested size are drawn;
    each subset's winner is the run with the higher mean over the subset's
    queries. A swap is counted when both subsets have a winner and they differ.
    Every trial draws from its own generator derived from ``seed``, so the
    result does not depend on the order trials are executed in.
    """
    n_classes = len(counts)
    rates = {}
    for size in subset_sizes:
        swaps = 0
        for trial in range(trials):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(size, trial)))
            picked = rng.choice(n_classes, size=2 * size, replace=False)
            verdicts = []
            for part in (picked[:size], picked[size:]):
                n = counts[part].sum()
                if n == 0:
                    verdicts.append(0)
                    continue
                verdicts.append(_winner(sums_a[part].sum() / n, sums_b[part].sum() / n))
            if verdicts[0] * verdicts[1] < 0:
                swaps += 1
        rates[size] = swaps / trials
    return rates


def reliability_swap_rate(
    a: Run,
    b: Run,
    c: Classification,
    metric: str,
    subset_sizes: Sequence[int],
    trials: int,
    seed: int,
    params: FMeasureParams = FMeasureParams(),
) -> ReliabilityEstimate:
    """Estimate how often two disjoint class subsets disagree on the better run."""
    if metric not in METRICS:
        raise InputError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    sizes = tuple(int(s) for s in subset_sizes)
    if not sizes:
        raise InputError("at least one subset size is required")
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    if min(sizes) < 2:
        raise InputError(f"subset sizes must be >= 2, got {min(sizes)}")
    n_classes = len(c.classes)
    if 2 * max(sizes) > n_classes:
        raise InputError(
            f"subset size {max(sizes)} needs {2 * max(sizes)} classes for two disjoint "
            f"subsets, but the classification has only {n_classes}"
        )

    labels = list(c.classes)
    summary_a = evaluate_run(a, c, params, curves=False)
    summary_b = evaluate_run(b, c, params, curves=False)
    sums_a, counts = _class_totals(summary_a, metric, labels)
    sums_b, _ = _class_totals(summary_b, metric, labels)
    rates = swap_rates_from_class_totals(sums_a, sums_b, counts, sizes, trials, seed)
    return ReliabilityEstimate(metric, sizes, rates, trials, seed)

"""Single-query retrieval measures computed from a binary gain vector.

Conventions shared by every function here:

* ranks are 1-based in docstrings, 0-based in code;
* ranks past the end of a (truncated) list count as irrelevant;
* a query with ``relevant_total == 0`` has no defined value for any
  recall-based measure and raises :class:`UndefinedMeasureError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import accumulate

from shapeeval.errors import UndefinedMeasureError
from shapeeval.runs import GainVector

DEFAULT_CUTOFF = 32
DEFAULT_RECALL_LEVELS = 20


@dataclass(frozen=True)
class FMeasureParams:
    alpha: float = 1.0
    cutoff: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")


@dataclass(frozen=True)
class PrCurve:
    raw_points: tuple[tuple[float, float], ...]
    interpolated: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class DcgCurve:
    cg: tuple[float, ...]
    dcg: tuple[float, ...]
    ideal_dcg: tuple[float, ...]
    ndcg: tuple[float, ...]


@dataclass(frozen=True)
class TierScores:
    nn: float
    first_tier: float
    second_tier: float


def _require_relevant(g: GainVector) -> int:
    if g.relevant_total < 1:
        raise UndefinedMeasureError(
            f"query {g.query!r} has no relevant objects (R = 0)" if g.query else "R = 0"
        )
    return g.relevant_total


def _hits(g: GainVector, k: int) -> int:
    return sum(g.gains[:k])


def precision_at(g: GainVector, k: int) -> float:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return _hits(g, k) / k


def precision_recall_at(g: GainVector, k: int) -> tuple[float, float]:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    r = _require_relevant(g)
    hits = _hits(g, k)
    return hits / k, hits / r


def pr_curve(g: GainVector, levels: int = DEFAULT_RECALL_LEVELS) -> PrCurve:
    """Raw and interpolated precision/recall points.

    A raw point ``(j / R, j / rank)`` is emitted at each rank holding the
    j-th relevant object. The interpolated curve has ``levels + 1`` points at
    recall ``0, 1/levels, ..., 1``; each takes the best precision among raw
    points at or beyond that recall, or 0 when there are none.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    r = _require_relevant(g)
    raw = []
    found = 0
    for rank, gain in enumerate(g.gains, start=1):
        if gain:
            found += 1
            raw.append((found / r, found / rank))

    # suffix maximum of precision over raw points, walked right to left
    interpolated = []
    best = 0.0
    idx = len(raw) - 1
    for t in range(levels, -1, -1):
        level = t / levels
        while idx >= 0 and raw[idx][0] >= level:
            best = max(best, raw[idx][1])
            idx -= 1
        interpolated.append((level, best))
    interpolated.reverse()
    return PrCurve(tuple(raw), tuple(interpolated))


def r_precision(g: GainVector) -> float:
    r = _require_relevant(g)
    return _hits(g, r) / r


def average_precision(g: GainVector) -> float:
    """Mean precision at the ranks of relevant objects, over all R of them.

    Relevant objects that were never retrieved contribute zero.
    """
    r = _require_relevant(g)
    total = 0.0
    found = 0
    for rank, gain in enumerate(g.gains, start=1):
        if gain:
            found += 1
            total += found / rank
    return total / r


def f_measure(precision: float, recall: float, alpha: float = 1.0) -> float:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    denom = alpha * precision + recall
    if denom == 0:
        return 0.0
    return (1 + alpha) * precision * recall / denom


def e_measure(g: GainVector, params: FMeasureParams = FMeasureParams()) -> float:
    """F-measure of the first ``params.cutoff`` results (higher is better).

    This is the number tabulated as "E-Measure" in benchmark summaries; the
    textbook complement ``1 - F`` is :func:`e_measure_complement`.
    """
    precision, recall = precision_recall_at(g, params.cutoff)
    return f_measure(precision, recall, params.alpha)


def e_measure_complement(g: GainVector, params: FMeasureParams = FMeasureParams()) -> float:
    return 1.0 - e_measure(g, params)


def _discount(rank: int) -> float:
    return 1.0 if rank == 1 else 1.0 / math.log2(rank)


def _dcg_prefix(gains) -> list[float]:
    return list(accumulate(gain * _discount(rank) for rank, gain in enumerate(gains, start=1)))


def ideal_gains(relevant_total: int, length: int) -> tuple[int, ...]:
    ones = min(relevant_total, length)
    return (1,) * ones + (0,) * (length - ones)


def dcg_curve(g: GainVector) -> DcgCurve:
    if not g.gains:
        raise ValueError("gain vector is empty")
    cg = [float(x) for x in accumulate(g.gains)]
    dcg = _dcg_prefix(g.gains)
    ideal = _dcg_prefix(ideal_gains(g.relevant_total, len(g.gains)))
    ndcg = [d / i if i else 1.0 for d, i in zip(dcg, ideal)]
    return DcgCurve(tuple(cg), tuple(dcg), tuple(ideal), tuple(ndcg))


def dcg_summary(g: GainVector, c_size_total: int) -> float:
    """Normalized DCG at the last rank of a full ranking.

    ``c_size_total`` is the number of objects in the database, so a full
    ranking has ``c_size_total - 1`` positions; shorter lists are padded with
    irrelevant results.
    """
    r = _require_relevant(g)
    depth = c_size_total - 1
    if depth < 1:
        raise ValueError(f"database size must be >= 2, got {c_size_total}")
    if len(g.gains) > depth:
        raise ValueError(
            f"ranking has {len(g.gains)} entries, more than the {depth} other objects"
        )
    dcg = sum(_discount(rank) for rank, gain in enumerate(g.gains, start=1) if gain)
    ideal = sum(_discount(rank) for rank in range(1, min(r, depth) + 1))
    return dcg / ideal


def tier_scores(g: GainVector) -> TierScores:
    r = _require_relevant(g)
    nn = float(g.gains[0]) if g.gains else 0.0
    return TierScores(nn, _hits(g, r) / r, _hits(g, 2 * r) / r)

"""Ranking-quality metrics over word-level result lists.

All metrics treat the ranked list as deduplicated word ids (best first)
and relevance as set membership. Conventions:

* reciprocal rank of a miss is 0;
* a first-relevant rank is capped (default 1000) when nothing relevant
  was retrieved within the output window;
* the median of an even count takes the lower middle, keeping integer
  ranks integer;
* P@k divides by k even when fewer than k items were retrieved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import EmptyJudgmentsError

RANK_CAP = 1000
REPORT_KS = (1, 10)


@dataclass(frozen=True, slots=True)
class RankedResult:
    """Deduplicated word ids in rank order for one query."""

    query_id: int
    word_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.word_ids)) != len(self.word_ids):
            raise ValueError("ranked result contains duplicate word_ids")


@dataclass(frozen=True, slots=True)
class QueryJudgment:
    ranked: RankedResult
    relevant: frozenset[int]


@dataclass(frozen=True, slots=True)
class PerQueryRecord:
    query_id: int
    average_precision: float
    reciprocal_rank: float
    first_relevant_rank: int


@dataclass(slots=True)
class EvalReport:
    map_: float
    mp_at: dict[int, float]
    mrr: float
    acc_at: dict[int, float]
    median_rank: int
    query_count: int
    per_query: list[PerQueryRecord] = field(default_factory=list)
    extras: dict[str, float] = field(default_factory=dict)

    def summary_items(self) -> list[tuple[str, float | int]]:
        """Headline columns in fixed report order."""
        items: list[tuple[str, float | int]] = [
            ("MAP", self.map_),
            ("MP@1", self.mp_at[1]),
            ("MP@10", self.mp_at[10]),
            ("MRR", self.mrr),
            ("Acc@1", self.acc_at[1]),
            ("Acc@10", self.acc_at[10]),
            ("MedianRank", self.median_rank),
        ]
        return items

    def to_text(self) -> str:
        lines = [f"{key}={value:.6f}" if isinstance(value, float) else f"{key}={value}"
                 for key, value in self.summary_items()]
        lines.append(f"QueryCount={self.query_count}")
        for key in sorted(self.extras):
            lines.append(f"{key}={self.extras[key]:.6f}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload: dict = {key: value for key, value in self.summary_items()}
        payload["QueryCount"] = self.query_count
        if self.extras:
            payload["extras"] = {k: self.extras[k] for k in sorted(self.extras)}
        payload["per_query"] = [
            {
                "query_id": record.query_id,
                "AP": record.average_precision,
                "RR": record.reciprocal_rank,
                "first_relevant_rank": record.first_relevant_rank,
            }
            for record in self.per_query
        ]
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"

    def write(self, base_path: str | Path) -> tuple[Path, Path]:
        """Write ``<base>.txt`` and ``<base>.json``; returns both paths."""
        base = Path(base_path)
        base.parent.mkdir(parents=True, exist_ok=True)
        text_path = base.with_name(base.name + ".txt")
        json_path = base.with_name(base.name + ".json")
        text_path.write_text(self.to_text(), encoding="utf-8")
        json_path.write_text(self.to_json(), encoding="utf-8")
        return text_path, json_path


def precision_at_k(judgment: QueryJudgment, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for w in judgment.ranked.word_ids[:k] if w in judgment.relevant)
    return hits / k


def average_precision(judgment: QueryJudgment, rel_size: int) -> float:
    """Sum of P@i over relevant positions i, divided by the given |Rel|."""
    if rel_size < 1:
        raise ValueError("rel_size must be >= 1")
    total = 0.0
    hits = 0
    for position, word_id in enumerate(judgment.ranked.word_ids, start=1):
        if word_id in judgment.relevant:
            hits += 1
            total += hits / position
    return total / rel_size


def reciprocal_rank(judgment: QueryJudgment) -> float:
    for position, word_id in enumerate(judgment.ranked.word_ids, start=1):
        if word_id in judgment.relevant:
            return 1.0 / position
    return 0.0


def first_relevant_rank_capped(judgment: QueryJudgment, cap: int = RANK_CAP) -> int:
    for position, word_id in enumerate(judgment.ranked.word_ids, start=1):
        if word_id in judgment.relevant:
            return position
    return cap


def accuracy_at_k(judgment: QueryJudgment, k: int) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    return int(any(w in judgment.relevant for w in judgment.ranked.word_ids[:k]))


def median_rank(ranks: Sequence[int]) -> int:
    """Lower-middle median of capped first-relevant ranks."""
    ordered = sorted(ranks)
    return ordered[(len(ordered) - 1) // 2]


def aggregate(
    judgments: Sequence[QueryJudgment],
    rel_sizes: Sequence[int],
    cap: int = RANK_CAP,
) -> EvalReport:
    """Mean the per-query metrics into one report."""
    if not judgments:
        raise EmptyJudgmentsError("no judgments to aggregate")
    if len(judgments) != len(rel_sizes):
        raise ValueError("judgments and rel_sizes must align")

    count = len(judgments)
    per_query: list[PerQueryRecord] = []
    mp: dict[int, list[float]] = {k: [] for k in REPORT_KS}
    acc: dict[int, int] = {k: 0 for k in REPORT_KS}
    aps: list[float] = []
    rrs: list[float] = []
    ranks: list[int] = []
    for judgment, rel_size in zip(judgments, rel_sizes):
        ap = average_precision(judgment, rel_size)
        rr = reciprocal_rank(judgment)
        rank = first_relevant_rank_capped(judgment, cap)
        aps.append(ap)
        rrs.append(rr)
        ranks.append(rank)
        for k in REPORT_KS:
            mp[k].append(precision_at_k(judgment, k))
            acc[k] += accuracy_at_k(judgment, k)
        per_query.append(PerQueryRecord(judgment.ranked.query_id, ap, rr, rank))

    # fsum: exactly rounded, so aggregation is permutation-invariant
    report = EvalReport(
        map_=math.fsum(aps) / count,
        mp_at={k: math.fsum(mp[k]) / count for k in REPORT_KS},
        mrr=math.fsum(rrs) / count,
        acc_at={k: acc[k] / count for k in REPORT_KS},
        median_rank=median_rank(ranks),
        query_count=count,
        per_query=per_query,
    )
    # P@1 and Acc@1 are the same per-query quantity, so the means must agree
    assert report.acc_at[1] == report.mp_at[1]
    return report

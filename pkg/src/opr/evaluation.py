"""Retrieval scoring: query-excluded mAP and the 4x precision@4 protocol."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ProtocolError
from .index import RankedList

PROTOCOL_MAP = "map"
PROTOCOL_UKB = "ukb"


@dataclass(frozen=True)
class EvalReport:
    protocol: str
    per_query: tuple[tuple[str, float], ...]
    aggregate: float

    @property
    def query_count(self) -> int:
        return len(self.per_query)


def average_precision(ranked: RankedList, relevant: set[str], exclude_query: bool) -> float:
    """Non-interpolated AP: mean of precision at each relevant rank.

    With exclude_query, the query's own entry is dropped from both the
    ranking and the relevant set before scoring. The normalizer counts
    only relevant items present in the ranking; absent ones contribute 0.
    """
    ids = [image_id for image_id, _ in ranked.hits]
    rel = set(relevant)
    if exclude_query:
        ids = [i for i in ids if i != ranked.query_id]
        rel.discard(ranked.query_id)
    if not rel:
        raise ProtocolError(f"query {ranked.query_id!r} has no relevant items after exclusion")
    present = rel.intersection(ids)
    if not present:
        return 0.0
    hits_seen = 0
    total = 0.0
    for rank, image_id in enumerate(ids, 1):
        if image_id in rel:
            hits_seen += 1
            total += hits_seen / rank
    return total / len(present)


def mean_average_precision(
    lists: list[RankedList], gt: dict[str, set[str]], exclude_query: bool = True
) -> EvalReport:
    if not lists:
        raise ProtocolError("no ranked lists to evaluate")
    per_query = []
    for ranked in lists:
        if ranked.query_id not in gt:
            raise ProtocolError(f"no ground truth for query {ranked.query_id!r}")
        per_query.append(
            (ranked.query_id, average_precision(ranked, gt[ranked.query_id], exclude_query))
        )
    aggregate = sum(v for _, v in per_query) / len(per_query)
    return EvalReport(PROTOCOL_MAP, tuple(per_query), aggregate)


def ukb_score(lists: list[RankedList], gt: dict[str, set[str]]) -> EvalReport:
    """Mean count of relevant items in the top 4 ranks, query kept in list."""
    if not lists:
        raise ProtocolError("no ranked lists to evaluate")
    per_query = []
    for ranked in lists:
        if ranked.query_id not in gt:
            raise ProtocolError(f"no ground truth for query {ranked.query_id!r}")
        if len(ranked.hits) < 4:
            raise ProtocolError(
                f"query {ranked.query_id!r} ranking has {len(ranked.hits)} entries, need 4"
            )
        relevant = gt[ranked.query_id]
        hits = sum(1 for image_id, _ in ranked.hits[:4] if image_id in relevant)
        per_query.append((ranked.query_id, float(hits)))
    aggregate = sum(v for _, v in per_query) / len(per_query)
    return EvalReport(PROTOCOL_UKB, tuple(per_query), aggregate)


# ---------------------------------------------------------------------------
# Ground-truth file: `query_id<TAB>relevant_id[,relevant_id...]` per line.


def parse_ground_truth(text: str) -> dict[str, set[str]]:
    gt: dict[str, set[str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"line {lineno}: expected query_id<TAB>relevant list")
        query_id, rest = line.split("\t", 1)
        relevant = {part for part in rest.strip().split(",") if part}
        if not relevant:
            raise ValueError(f"line {lineno}: empty relevant set for {query_id!r}")
        if query_id in gt:
            raise ValueError(f"line {lineno}: duplicate query {query_id!r}")
        gt[query_id] = relevant
    return gt


def format_ground_truth(gt: dict[str, set[str]]) -> str:
    lines = []
    for query_id in sorted(gt):
        lines.append(f"{query_id}\t{','.join(sorted(gt[query_id]))}")
    return "".join(line + "\n" for line in lines)


def render_report(report: EvalReport) -> str:
    """Human-readable table followed by one machine-readable aggregate line."""
    label = "ap" if report.protocol == PROTOCOL_MAP else "hits@4"
    width = max([len("query")] + [len(q) for q, _ in report.per_query])
    lines = [f"{'query'.ljust(width)}  {label}"]
    for query_id, value in report.per_query:
        lines.append(f"{query_id.ljust(width)}  {value!r}")
    lines.append(f"queries: {report.query_count}")
    key = "mAP" if report.protocol == PROTOCOL_MAP else "ukb"
    lines.append(f"{key}={report.aggregate!r}")
    return "".join(line + "\n" for line in lines)

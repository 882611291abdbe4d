"""Read a finished store back into verdicts, truth scores and rankings."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MissingVerdict
from ..model import Specification, TruthScore, Verdict, RankedList, Source, spec_from_dict, verdict_from_dict
from ..ranking import IndeterminatePolicy, rank, satisfied_evidence, truth_score
from .scheduler import Plan
from .store import ResultStore


@dataclass
class QueryResult:
    query_id: str
    spec: Specification | None
    error: str | None
    verdicts: dict[str, list[Verdict]]
    scores: dict[str, TruthScore]
    ranking: RankedList | None


def query_result(store: ResultStore, p: Plan, query_id: str,
                 policy: IndeterminatePolicy = IndeterminatePolicy.COUNT_IN_TOTAL) -> QueryResult:
    doc = store.get("specs", [query_id])
    if doc is None:
        raise MissingVerdict(f"query {query_id!r} has not been parsed")
    if "error" in doc:
        return QueryResult(query_id, None, doc["error"], {}, {}, None)
    spec = spec_from_dict(doc["spec"], Source(doc["source"]))
    ids = [t.id for t in spec.triplets]
    verdicts: dict[str, list[Verdict]] = {}
    for image in p.images:
        found = []
        for tid in ids:
            v = store.get("verdicts", [query_id, tid, image])
            if v is None:
                raise MissingVerdict(f"no verdict for {query_id}/{tid} on {image}")
            found.append(verdict_from_dict(v))
        verdicts[image] = found
    scores = {i: truth_score(vs, policy, ids) for i, vs in verdicts.items()}
    evidence = {i: satisfied_evidence(vs) for i, vs in verdicts.items()}
    return QueryResult(query_id, spec, None, verdicts, scores, rank(list(p.images), scores, evidence))


def all_results(store: ResultStore, p: Plan,
                policy: IndeterminatePolicy = IndeterminatePolicy.COUNT_IN_TOTAL) -> dict[str, QueryResult]:
    return {q.query_id: query_result(store, p, q.query_id, policy) for q in p.queries}

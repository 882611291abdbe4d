"""Easy/Hard splits, Recall@K and comparison tables."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InsufficientCases, MalformedInput, MissingRanking
from .model import RankedList

DEFAULT_KS = (1, 3, 5, 10)
SPLIT_FRACTION = 0.25


class Split(str, enum.Enum):
    EASY = "Easy"
    MIDDLE = "Middle"
    HARD = "Hard"


REPORT_SPLITS = ("Easy", "Hard", "Combined", "All")


@dataclass(frozen=True)
class EvalCase:
    query_id: str
    query: str
    ground_truth: str
    pool: tuple[str, ...]

    def __post_init__(self):
        if len(self.pool) < 2:
            raise MalformedInput(f"case {self.query_id!r}: pool needs at least two images")
        if self.ground_truth not in self.pool:
            raise MalformedInput(f"case {self.query_id!r}: ground truth {self.ground_truth!r} not in pool")

    @classmethod
    def from_dict(cls, d: dict, where: str = "$") -> "EvalCase":
        try:
            return cls(str(d["query_id"]), str(d.get("query", "")), str(d["ground_truth"]), tuple(d["pool"]))
        except KeyError as e:
            raise MalformedInput(f"case is missing {e.args[0]!r}", where) from None
        except MalformedInput as e:
            raise MalformedInput(e.reason, where) from None

    def to_dict(self) -> dict:
        return {"query_id": self.query_id, "query": self.query, "ground_truth": self.ground_truth,
                "pool": list(self.pool)}


@dataclass(frozen=True)
class SplitAssignment:
    assignment: Mapping[str, Split]
    # baseline ranks at the last Easy case and the first Hard case
    boundaries: tuple[int, int]

    def cases(self, split: Split) -> list[str]:
        return sorted(q for q, s in self.assignment.items() if s is split)

    def to_dict(self) -> dict:
        return {"assignment": {q: s.value for q, s in sorted(self.assignment.items())},
                "boundaries": list(self.boundaries)}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        try:
            return cls({q: Split(s) for q, s in d["assignment"].items()}, tuple(d.get("boundaries", (0, 0))))
        except (KeyError, ValueError, AttributeError) as e:
            raise MalformedInput(f"bad split file: {e}") from None


def baseline_rank(case: EvalCase, ranking: Sequence[str]) -> int:
    """1-based rank of the ground truth; absent means last place in the pool."""
    try:
        return list(ranking).index(case.ground_truth) + 1
    except ValueError:
        return len(case.pool)


def build_splits(cases: Sequence[EvalCase] | Sequence[str], baseline: Mapping[str, int]) -> SplitAssignment:
    """Top quarter by baseline rank is Easy, bottom quarter is Hard."""
    ids = sorted({c.query_id if isinstance(c, EvalCase) else c for c in cases})
    n = len(ids)
    if n < 4:
        raise InsufficientCases(f"need at least 4 cases to split, got {n}")
    missing = [q for q in ids if q not in baseline]
    if missing:
        raise MalformedInput(f"no baseline rank for {missing[:5]}")
    ordered = sorted(ids, key=lambda q: (baseline[q], q))
    m = int(n * SPLIT_FRACTION)
    assignment = {q: Split.MIDDLE for q in ordered}
    for q in ordered[:m]:
        assignment[q] = Split.EASY
    for q in ordered[n - m:]:
        assignment[q] = Split.HARD
    bounds = (baseline[ordered[m - 1]], baseline[ordered[n - m]]) if m else (0, 0)
    return SplitAssignment(assignment, bounds)


def recall_at_k(ranking: RankedList | Sequence[str], ground_truth: str, k: int) -> int:
    if k < 1:
        raise ValueError("k must be at least 1")
    ids = ranking.image_ids if isinstance(ranking, RankedList) else list(ranking)
    return int(ground_truth in ids[:k])


@dataclass
class EvalTable:
    ks: tuple[int, ...]
    # system -> split -> k -> mean recall
    recalls: dict[str, dict[str, dict[int, float]]]
    counts: dict[str, int]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "counts": self.counts,
            "recall": {s: {sp: {str(k): v for k, v in row.items()} for sp, row in splits.items()}
                       for s, splits in self.recalls.items()},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        header = ["system"] + [f"{sp} R@{k}" for sp in REPORT_SPLITS for k in self.ks]
        rows = [header]
        for system in sorted(self.recalls):
            row = [system]
            for sp in REPORT_SPLITS:
                for k in self.ks:
                    v = self.recalls[system][sp].get(k)
                    row.append("-" if v is None else f"{v:.3f}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
                 for r in rows]
        counts = ", ".join(f"{sp}={self.counts[sp]}" for sp in REPORT_SPLITS)
        return "\n".join(lines + [f"cases: {counts}"] + [f"note: {n}" for n in self.notes]) + "\n"


def evaluate(cases: Sequence[EvalCase], systems: Mapping[str, Mapping[str, RankedList | Sequence[str]]],
             splits: SplitAssignment, ks: Sequence[int] = DEFAULT_KS) -> EvalTable:
    members = {
        "Easy": [c for c in cases if splits.assignment.get(c.query_id) is Split.EASY],
        "Hard": [c for c in cases if splits.assignment.get(c.query_id) is Split.HARD],
        "All": list(cases),
    }
    members["Combined"] = members["Easy"] + members["Hard"]
    recalls: dict[str, dict[str, dict[int, float]]] = {}
    for name, rankings in systems.items():
        missing = [c.query_id for c in cases if c.query_id not in rankings]
        if missing:
            raise MissingRanking(f"system {name!r} has no ranking for {missing[:5]}")
        recalls[name] = {}
        for sp in REPORT_SPLITS:
            group = members[sp]
            recalls[name][sp] = {
                k: (sum(recall_at_k(rankings[c.query_id], c.ground_truth, k) for c in group) / len(group))
                if group else None
                for k in ks
            }
    return EvalTable(
        tuple(ks), recalls, {sp: len(members[sp]) for sp in REPORT_SPLITS},
        notes=["Combined = Easy + Hard cases (Middle excluded); All = every case"],
    )

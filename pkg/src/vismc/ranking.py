"""Truth scores, verification ranking and baseline re-ranking."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateVerdict, EmptyBaseline, MalformedInput, MissingScore, MissingVerdict
from .model import Outcome, RankedEntry, RankedList, TruthScore, Verdict

logger = logging.getLogger(__name__)


class IndeterminatePolicy(str, enum.Enum):
    COUNT_IN_TOTAL = "count"
    EXCLUDE = "exclude"


@dataclass(frozen=True)
class BaselineRanking:
    query_id: str
    entries: tuple[str, ...]

    def __post_init__(self):
        if not self.entries:
            raise EmptyBaseline(f"baseline for {self.query_id!r} is empty")
        if len(set(self.entries)) != len(self.entries):
            raise MalformedInput(f"duplicate image ids in baseline for {self.query_id!r}")

    @property
    def K(self) -> int:
        return len(self.entries)

    def top(self, k: int) -> "BaselineRanking":
        return BaselineRanking(self.query_id, self.entries[:k])


def truth_score(verdicts: Sequence[Verdict], policy: IndeterminatePolicy = IndeterminatePolicy.COUNT_IN_TOTAL,
                triplet_ids: Iterable[int] | None = None) -> TruthScore:
    """Fraction of triplets verified for one image.

    ``triplet_ids`` is the full id set of the specification; when given,
    a missing id raises :class:`MissingVerdict`.
    """
    seen: set[int] = set()
    for v in verdicts:
        if v.triplet_id in seen:
            raise DuplicateVerdict(f"two verdicts for triplet {v.triplet_id} on {v.image_id}")
        seen.add(v.triplet_id)
    if triplet_ids is not None:
        missing = set(triplet_ids) - seen
        if missing:
            raise MissingVerdict(f"no verdict for triplets {sorted(missing)}")
    if not verdicts:
        raise MissingVerdict("no verdicts")
    satisfied = sum(v.outcome is Outcome.SATISFIED for v in verdicts)
    total = len(verdicts)
    if policy is IndeterminatePolicy.EXCLUDE:
        determinate = sum(v.outcome is not Outcome.INDETERMINATE for v in verdicts)
        if determinate == 0:
            return TruthScore(0, total, all_indeterminate=True)
        total = determinate
    return TruthScore(satisfied, total)


def satisfied_evidence(verdicts: Iterable[Verdict]) -> int:
    return sum(v.evidence_size() for v in verdicts if v.outcome is Outcome.SATISFIED)


def rank(images: Sequence[str], scores: Mapping[str, TruthScore],
         evidence: Mapping[str, int] | None = None) -> RankedList:
    """Order images by truth score; ties by satisfied evidence, then image id."""
    missing = [i for i in images if i not in scores]
    if missing:
        raise MissingScore(f"no truth score for {missing}")
    evidence = evidence or {}
    ordered = sorted(set(images), key=lambda i: (-scores[i].value, -evidence.get(i, 0), i))
    return RankedList(tuple(RankedEntry(i, scores[i]) for i in ordered))


def rerank(base: BaselineRanking, scores: Mapping[str, TruthScore]) -> RankedList:
    """Weight each baseline position ``i`` (0-based) by ``(K - i) * score``."""
    K = base.K
    entries = []
    for i, image in enumerate(base.entries):
        score = scores.get(image)
        if score is None:
            logger.warning("no truth score for %s in %s; using 0", image, base.query_id)
            score = TruthScore(0, 1)
        entries.append(RankedEntry(image, score, Fraction(K - i) * score.value, i))
    entries.sort(key=lambda e: (-e.rerank_score, e.baseline_rank, e.image_id))
    return RankedList(tuple(entries))

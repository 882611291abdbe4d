"""Producer-consumer scheduling of parse, synthesize and execute tasks.

A central loop owns the task graph. Parse and synthesize tasks run on the
light pool, execute tasks on the heavy pool. Downstream tasks are created
only when their dependency has a stored result, so a query that fails to
parse never produces work. All results go through the store's idempotent
upsert, which makes reruns and resumes safe.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import json
import logging
import threading
import time
from collections import deque
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from ..dsl import degenerate_program, program_from_dict, program_to_dict
from ..errors import InvalidSpecification, MalformedInput, ParseError, PlanError, PlanMismatch, SynthesisError
from ..model import (
    ErrorClass, Outcome, Provenance, Source, Verdict, spec_from_dict, spec_to_dict,
    validate_specification, verdict_to_dict,
)
from ..parser import parse_or_fallback
from ..synth import DEFAULT_LEXICON, PredicateLexicon, synthesize
from ..vm import VmConfig, execute
from .store import ResultStore

logger = logging.getLogger(__name__)


class Kind(str, enum.Enum):
    PARSE = "parse"
    SYNTHESIZE = "synthesize"
    EXECUTE = "execute"


class State(str, enum.Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


@dataclass(frozen=True)
class QueryItem:
    query_id: str
    text: str
    # externally produced specification document, bypassing the grammar
    triplets: tuple | None = None

    def to_dict(self) -> dict:
        d = {"query_id": self.query_id, "query": self.text}
        if self.triplets is not None:
            d["triplets"] = list(self.triplets)
        return d

    @classmethod
    def from_dict(cls, d: dict, where: str = "$") -> "QueryItem":
        if not isinstance(d.get("query_id"), str) or not isinstance(d.get("query"), str):
            raise MalformedInput("query record needs string query_id and query", where)
        triplets = d.get("triplets")
        return cls(d["query_id"], d["query"], tuple(triplets) if triplets is not None else None)


@dataclass(frozen=True)
class Plan:
    queries: tuple[QueryItem, ...]
    images: tuple[str, ...]
    vm: VmConfig = VmConfig()
    lexicon: PredicateLexicon = DEFAULT_LEXICON
    fallback_composite: bool = False
    backend_id: str = "oracle"

    def to_dict(self) -> dict:
        return {
            "queries": [q.to_dict() for q in self.queries],
            "images": list(self.images),
            "vm": self.vm.to_dict(),
            "lexicon": self.lexicon.fingerprint(),
            "fallback_composite": self.fallback_composite,
            "backend": self.backend_id,
        }

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def plan(queries: Sequence[QueryItem], images: Iterable[str], vm: VmConfig = VmConfig(),
         lexicon: PredicateLexicon = DEFAULT_LEXICON, fallback_composite: bool = False,
         backend_id: str = "oracle") -> Plan:
    images = tuple(sorted(set(images)))
    if not queries:
        raise PlanError("no queries to plan")
    if not images:
        raise PlanError("corpus has no images")
    ids = [q.query_id for q in queries]
    if len(set(ids)) != len(ids):
        raise PlanError("duplicate query ids")
    return Plan(tuple(queries), images, vm, lexicon, fallback_composite, backend_id)


_ids = itertools.count()


@dataclass
class Task:
    kind: Kind
    query_id: str
    triplet_id: int | None = None
    image_id: str | None = None
    attempts: int = 0
    state: State = State.PENDING
    id: int = field(default_factory=lambda: next(_ids))
    pool: str = ""

    @property
    def key(self) -> list:
        if self.kind is Kind.PARSE:
            return [self.query_id]
        if self.kind is Kind.SYNTHESIZE:
            return [self.query_id, self.triplet_id]
        return [self.query_id, self.triplet_id, self.image_id]

    @property
    def table(self) -> str:
        return {Kind.PARSE: "specs", Kind.SYNTHESIZE: "routines", Kind.EXECUTE: "verdicts"}[self.kind]


@dataclass
class RunReport:
    planned: dict = field(default_factory=lambda: {k.value: 0 for k in Kind})
    done: dict = field(default_factory=lambda: {k.value: 0 for k in Kind})
    failed: dict = field(default_factory=lambda: {k.value: 0 for k in Kind})
    skipped: dict = field(default_factory=lambda: {k.value: 0 for k in Kind})
    retries: int = 0
    parse_failures: list = field(default_factory=list)
    pools: dict = field(default_factory=lambda: {k.value: set() for k in Kind})
    wall_time_s: float = 0.0

    @property
    def executed(self) -> int:
        return sum(self.done.values()) + sum(self.failed.values())

    def to_dict(self) -> dict:
        return {
            "planned": self.planned, "done": self.done, "failed": self.failed,
            "skipped": self.skipped, "retries": self.retries,
            "parse_failures": self.parse_failures,
            "pools": {k: sorted(v) for k, v in self.pools.items()},
            "wall_time_s": round(self.wall_time_s, 4),
        }


# -- stage functions (pure) ---------------------------------------------------

def parse_stage(item: QueryItem, fallback_composite: bool) -> dict:
    try:
        if item.triplets is not None:
            spec = spec_from_dict({"query": item.text, "triplets": list(item.triplets)}, Source.EXTERNAL_JSON)
            errors = validate_specification(spec)
            if errors:
                raise InvalidSpecification(errors)
        else:
            spec = parse_or_fallback(item.text, fallback_composite)
    except (ParseError, MalformedInput, InvalidSpecification) as e:
        return {"error": f"{type(e).__name__}: {e}"}
    return {"spec": spec_to_dict(spec), "source": spec.source.value}


def synth_stage(triplet_doc: dict, triplet_id: int, query_text: str, lexicon: PredicateLexicon) -> dict:
    spec = spec_from_dict({"query": query_text, "triplets": [triplet_doc]})
    try:
        program = synthesize(spec.triplets[0], lexicon)
    except SynthesisError as e:
        program = degenerate_program(triplet_id, ErrorClass.BAD_TRIPLET)
        return {**program_to_dict(program), "message": str(e)}
    return program_to_dict(program)


def execute_stage(routine_doc: dict, image_id: str, backend, cfg: VmConfig) -> dict:
    program = program_from_dict({k: v for k, v in routine_doc.items() if k != "message"},
                                provenance=Provenance.SYNTHESIZED)
    verdict = execute(program, image_id, backend, cfg)
    if program.degenerate is not None and "message" in routine_doc:
        verdict = replace(verdict, message=routine_doc["message"])
    return verdict_to_dict(verdict)


def _failed_value(task: Task, exc: BaseException) -> dict:
    message = f"{type(exc).__name__}: {exc}"
    if task.kind is Kind.PARSE:
        return {"error": message}
    if task.kind is Kind.SYNTHESIZE:
        return {**program_to_dict(degenerate_program(task.triplet_id, ErrorClass.BAD_ROUTINE_GENERATION)),
                "message": message}
    v = Verdict(task.image_id, task.triplet_id, Outcome.INDETERMINATE, (), ErrorClass.BACKEND_FAILURE, message)
    return verdict_to_dict(v)


# -- scheduler ----------------------------------------------------------------

def run(p: Plan, backend, store: ResultStore, light: int = 1, heavy: int = 1, max_retries: int = 2,
        progress: Callable[[Task, RunReport], None] | None = None,
        fault_hook: Callable[[Task], None] | None = None) -> RunReport:
    """Run (or continue) a plan until every task is Done or Failed."""
    if light < 1 or heavy < 1:
        raise ValueError("pool sizes must be at least 1")
    started = time.perf_counter()
    report = RunReport()
    store.begin(p.hash())
    queries = {q.query_id: q for q in p.queries}
    ready: deque[Task] = deque()

    def expand(task_kind: Kind, query_id: str, triplet_id: int | None = None):
        """Queue the direct dependents of a stored result."""
        if task_kind is Kind.PARSE:
            value = store.get("specs", [query_id])
            if "error" in value:
                return
            for t in value["spec"]["triplets"]:
                child = Task(Kind.SYNTHESIZE, query_id, t["id"])
                report.planned[child.kind.value] += 1
                if store.has("routines", child.key):
                    report.skipped[child.kind.value] += 1
                    expand(Kind.SYNTHESIZE, query_id, t["id"])
                else:
                    ready.append(child)
        elif task_kind is Kind.SYNTHESIZE:
            for image in p.images:
                child = Task(Kind.EXECUTE, query_id, triplet_id, image)
                report.planned[child.kind.value] += 1
                if store.has("verdicts", child.key):
                    report.skipped[child.kind.value] += 1
                else:
                    ready.append(child)

    for q in p.queries:
        t = Task(Kind.PARSE, q.query_id)
        report.planned[t.kind.value] += 1
        if store.has("specs", t.key):
            report.skipped[t.kind.value] += 1
            expand(Kind.PARSE, q.query_id)
        else:
            ready.append(t)

    def work(task: Task) -> dict:
        task.pool = threading.current_thread().name.split("_")[0]
        if fault_hook is not None:
            fault_hook(task)
        q = queries[task.query_id]
        if task.kind is Kind.PARSE:
            return parse_stage(q, p.fallback_composite)
        if task.kind is Kind.SYNTHESIZE:
            spec = store.get("specs", [task.query_id])["spec"]
            tdoc = next(t for t in spec["triplets"] if t["id"] == task.triplet_id)
            return synth_stage(tdoc, task.triplet_id, spec["query"], p.lexicon)
        routine = store.get("routines", [task.query_id, task.triplet_id])
        return execute_stage(routine, task.image_id, backend, p.vm)

    pools = {
        "light": ThreadPoolExecutor(light, thread_name_prefix="light"),
        "heavy": ThreadPoolExecutor(heavy, thread_name_prefix="heavy"),
    }
    limits = {"light": 2 * light, "heavy": 2 * heavy}
    in_flight: dict[Future, Task] = {}
    try:
        while ready or in_flight:
            deferred = deque()
            while ready:
                task = ready.popleft()
                pool = "heavy" if task.kind is Kind.EXECUTE else "light"
                if sum(1 for t in in_flight.values() if (t.kind is Kind.EXECUTE) == (pool == "heavy")) >= limits[pool]:
                    deferred.append(task)
                    continue
                task.state = State.RUNNING
                in_flight[pools[pool].submit(work, task)] = task
            ready = deferred
            if not in_flight:
                continue
            done, _ = wait(list(in_flight), return_when=FIRST_COMPLETED)
            for fut in sorted(done, key=lambda f: in_flight[f].id):
                task = in_flight.pop(fut)
                try:
                    value = fut.result()
                except Exception as e:
                    task.attempts += 1
                    if task.attempts <= max_retries:
                        report.retries += 1
                        task.state = State.PENDING
                        ready.append(task)
                        logger.info("retrying %s %s after %s", task.kind.value, task.key, e)
                        continue
                    task.state = State.FAILED
                    report.failed[task.kind.value] += 1
                    value = _failed_value(task, e)
                else:
                    task.state = State.DONE
                    report.done[task.kind.value] += 1
                report.pools[task.kind.value].add(task.pool)
                store.upsert(task.table, task.key, value)
                if task.kind is Kind.PARSE and "error" in value:
                    report.parse_failures.append(task.query_id)
                expand(task.kind, task.query_id, task.triplet_id)
                if progress is not None:
                    progress(task, report)
    except BaseException:
        for fut in in_flight:
            fut.cancel()
        store.close()
        raise
    finally:
        for ex in pools.values():
            ex.shutdown(wait=True, cancel_futures=True)
    store.finalize()
    report.wall_time_s = time.perf_counter() - started
    return report


def resume(store: ResultStore, p: Plan, backend, **kwargs) -> RunReport:
    """Fill in whatever an interrupted run left missing."""
    if not store.exists():
        raise PlanMismatch(f"no store at {store.root} to resume")
    if store.plan_hash != p.hash():
        raise PlanMismatch(f"store {store.root} was built for a different plan")
    return run(p, backend, store, **kwargs)


__all__ = ["Kind", "Plan", "QueryItem", "RunReport", "Task", "plan", "resume", "run"]

"""``vismc`` command-line entry point.

Settings are merged from built-in defaults, then ``vismc.toml`` (or
``--config``), then ``VISMC_*`` environment variables, then flags.

Exit codes: 0 success, 1 input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .backends import MockDetectorServer, OracleBackend, RemoteBackend, RemoteConfig, cache_wrap, load_corpus
from .dsl import check_program, degenerate_program, program_from_dict, program_to_dict
from .errors import (
    EmptyBaseline, InsufficientCases, InvalidSpecification, MalformedInput, MissingRanking, ParseError,
    PlanError, PlanMismatch, StaticCheckError, SynthesisError, VismcError,
)
from .evaluation import EvalCase, SplitAssignment, baseline_rank, build_splits, evaluate
from .io import atomic_write, dumps_jsonl, read_json, read_jsonl
from .model import (
    ErrorClass, Outcome, Provenance, QueryText, Source, Verdict, ranked_list_to_dicts, spec_from_dict, spec_to_dict,
    validate_specification, verdict_from_dict, verdict_to_dict,
)
from .parser import parse_or_fallback
from .pipeline import QueryItem, ResultStore, all_results, plan, resume, run
from .ranking import BaselineRanking, IndeterminatePolicy, rank, rerank, satisfied_evidence, truth_score
from .synth import DEFAULT_LEXICON, classify_predicate, load_lexicon, synthesize
from .vm import VmConfig, execute

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger("vismc")

INPUT_ERRORS = (
    MalformedInput, InvalidSpecification, ParseError, EmptyBaseline, InsufficientCases, MissingRanking,
    PlanError, PlanMismatch, FileNotFoundError, IsADirectoryError, NotADirectoryError,
)

COUNTEREXAMPLE = "visual counterexample to φ in v"


@dataclass(frozen=True)
class Setting:
    type: type
    default: Any
    help: str


SETTINGS = {
    "detect_threshold": Setting(float, 0.3, "minimum detector score kept by DETECT"),
    "near_frac": Setting(float, 0.25, "near: max center distance as a fraction of the image diagonal"),
    "min_overlap": Setting(float, 0.25, "on: min horizontal overlap as a fraction of the subject width"),
    "inside_frac": Setting(float, 0.9, "inside: min fraction of the subject area covered"),
    "contact_tol": Setting(float, 0.05, "on: vertical contact tolerance"),
    "backend": Setting(str, "oracle", "perception backend: oracle or remote"),
    "endpoint": Setting(str, "http://127.0.0.1:8700", "remote detector base URL"),
    "timeout_ms": Setting(int, 10_000, "remote call deadline in milliseconds"),
    "retries": Setting(int, 2, "remote transport retries"),
    "max_in_flight": Setting(int, 8, "max concurrent remote requests"),
    "light": Setting(int, 2, "light worker pool size (parse, synthesize)"),
    "heavy": Setting(int, 4, "heavy worker pool size (execute)"),
    "policy": Setting(str, "count", "indeterminate verdicts: count (in the total) or exclude"),
    "fallback_composite": Setting(bool, False, "treat unparseable queries as one composite triplet"),
    "lexicon": Setting(str, "", "predicate lexicon JSON file"),
    "cache": Setting(str, "", "perception replay cache (JSONL)"),
    "replay": Setting(bool, False, "serve perception only from the cache"),
}
VM_KEYS = ("detect_threshold", "near_frac", "min_overlap", "inside_frac", "contact_tol")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _coerce(name: str, value: Any, origin: str) -> Any:
    kind = SETTINGS[name].type
    if kind is bool:
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise MalformedInput(f"{name} must be a boolean, got {value!r}", origin)
    try:
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return kind(value)
    except (TypeError, ValueError):
        raise MalformedInput(f"{name} must be {kind.__name__}, got {value!r}", origin) from None


def resolve_settings(args: argparse.Namespace, environ: dict | None = None) -> dict:
    environ = os.environ if environ is None else environ
    merged = {k: s.default for k, s in SETTINGS.items()}
    path = getattr(args, "config", None)
    explicit = path is not None
    path = Path(path or "vismc.toml")
    if path.exists():
        try:
            doc = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as e:
            raise MalformedInput(f"invalid config file: {e}", str(path)) from None
        for key, value in doc.items():
            if key not in SETTINGS or isinstance(value, (dict, list)):
                raise MalformedInput(f"unknown or non-scalar config key {key!r}", str(path))
            merged[key] = _coerce(key, value, str(path))
    elif explicit:
        raise FileNotFoundError(f"config file not found: {path}")
    for key in SETTINGS:
        env = environ.get("VISMC_" + key.upper())
        if env is not None:
            merged[key] = _coerce(key, env, "VISMC_" + key.upper())
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if merged["backend"] not in ("oracle", "remote"):
        raise MalformedInput(f"unknown backend {merged['backend']!r}", "backend")
    if merged["policy"] not in ("count", "exclude"):
        raise MalformedInput(f"unknown policy {merged['policy']!r}", "policy")
    return merged


def vm_config(settings: dict) -> VmConfig:
    return VmConfig.from_mapping({k: settings[k] for k in VM_KEYS})


def _lexicon(settings: dict):
    return load_lexicon(settings["lexicon"]) if settings["lexicon"] else DEFAULT_LEXICON


def _backend(settings: dict, corpus_dir: str | None):
    if settings["backend"] == "remote":
        cfg = RemoteConfig(settings["retries"], settings["timeout_ms"], max_in_flight=settings["max_in_flight"])
        backend = RemoteBackend(settings["endpoint"], cfg)
        backend_id = f"remote:{settings['endpoint']}"
    else:
        if not corpus_dir:
            raise MalformedInput("--corpus is required for the oracle backend", "--corpus")
        backend = OracleBackend(_corpus(corpus_dir))
        backend_id = "oracle"
    if settings["cache"]:
        backend = cache_wrap(backend, settings["cache"], replay=settings["replay"])
    return backend, backend_id


def _corpus(corpus_dir: str):
    if not Path(corpus_dir).is_dir():
        raise FileNotFoundError(f"corpus directory not found: {corpus_dir}")
    corpus = load_corpus(corpus_dir)
    if not corpus:
        raise MalformedInput("no *.scene.json files", corpus_dir)
    return corpus


def _emit(text: str, output: str | None) -> None:
    if output:
        atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _policy(settings: dict) -> IndeterminatePolicy:
    return IndeterminatePolicy(settings["policy"])


def _load_spec(path: str):
    doc = read_json(path)
    source = Source.EXTERNAL_JSON
    if isinstance(doc, dict) and doc.get("source") == Source.GRAMMAR.value:
        source = Source.GRAMMAR
    spec = spec_from_dict(doc, source, path)
    errors = validate_specification(spec)
    if errors:
        raise InvalidSpecification(errors)
    return spec


def _load_routines(path: str):
    doc = read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("routines", [doc])
    if not isinstance(doc, list):
        raise MalformedInput("routines file must hold a list of routines", path)
    return [program_from_dict(d, f"{path}[{i}]", Provenance.EXTERNAL_CODE) for i, d in enumerate(doc)]


def _load_verdicts(path: str) -> list[tuple[str, Verdict]]:
    out = []
    for n, rec in enumerate(read_jsonl(path), 1):
        out.append((str(rec.get("query_id", "")), verdict_from_dict(rec, f"{path}:{n}")))
    return out


def _load_rankings(path: str) -> dict[str, list[str]]:
    out = {}
    for n, rec in enumerate(read_jsonl(path), 1):
        ranking = rec.get("ranking")
        if "query_id" not in rec or not isinstance(ranking, list):
            raise MalformedInput("ranking record needs query_id and a ranking list", f"{path}:{n}")
        out[str(rec["query_id"])] = [r["image_id"] if isinstance(r, dict) else str(r) for r in ranking]
    return out


# -- subcommands ------------------------------------------------------------

def cmd_parse(args, settings) -> int:
    q = QueryText(args.query)
    errors = q.errors()
    if errors:
        raise MalformedInput("; ".join(errors), "--query")
    spec = parse_or_fallback(args.query, settings["fallback_composite"])
    doc = {**spec_to_dict(spec), "source": spec.source.value}
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def cmd_synth(args, settings) -> int:
    spec = _load_spec(args.spec)
    lex = _lexicon(settings)
    routines = []
    for t in spec.triplets:
        try:
            routines.append(program_to_dict(synthesize(t, lex)))
            logger.info("triplet %d %s: %s", t.id, t, classify_predicate(t, lex))
        except SynthesisError as e:
            print(f"warning: {e}", file=sys.stderr)
            routines.append({**program_to_dict(degenerate_program(t.id, ErrorClass.BAD_TRIPLET)), "message": str(e)})
    _emit(json.dumps(routines, indent=2) + "\n", args.output)
    return 0


def _verify(spec, routines, images, backend, cfg) -> dict[str, list[Verdict]]:
    by_id = {r.triplet_id: r for r in routines}
    missing = [t.id for t in spec.triplets if t.id not in by_id]
    if missing:
        raise MalformedInput(f"no routine for triplets {missing}", "--routines")
    out = {}
    for image in images:
        out[image] = [execute(by_id[t.id], image, backend, cfg) for t in spec.triplets]
    return out


def _ingest_checked(path: str) -> tuple[list, dict[int, str]]:
    """Load routines; any that fail static checks are replaced by a degenerate stand-in."""
    programs, messages = [], {}
    raw = read_json(path)
    raw = raw.get("routines", [raw]) if isinstance(raw, dict) else raw
    for p, d in zip(_load_routines(path), raw):
        if isinstance(d, dict) and d.get("message"):
            messages[p.triplet_id] = d["message"]
        if p.degenerate is None:
            try:
                check_program(p)
            except StaticCheckError as e:
                print(f"warning: routine {p.triplet_id} rejected: {e}", file=sys.stderr)
                messages[p.triplet_id] = f"static check failed: {e}"
                p = degenerate_program(p.triplet_id, ErrorClass.BAD_ROUTINE_GENERATION)
        programs.append(p)
    return programs, messages


def cmd_verify(args, settings) -> int:
    spec = _load_spec(args.spec)
    programs, messages = _ingest_checked(args.routines)
    backend, _ = _backend(settings, args.corpus)
    if args.images:
        images = args.images.split(",")
    elif args.corpus:
        images = sorted(_corpus(args.corpus))
    else:
        raise MalformedInput("give --images or --corpus", "--images")
    verdicts = _verify(spec, programs, images, backend, vm_config(settings))
    records = []
    lines = [f"{'image':<16} {'triplet':<40} {'outcome':<14} error"]
    counterexamples = []
    for image, vs in verdicts.items():
        for t, v in zip(spec.triplets, vs):
            if v.error_class is not None and messages.get(t.id):
                v = replace(v, message=messages[t.id])
            rec = verdict_to_dict(v)
            if args.query_id:
                rec["query_id"] = args.query_id
            records.append(rec)
            lines.append(f"{image:<16} {str(t)[:40]:<40} {v.outcome.value:<14} {v.error_class.value if v.error_class else '-'}")
            if v.outcome is Outcome.VIOLATED:
                counterexamples.append(f"{COUNTEREXAMPLE}: triplet {t.id} {t} fails on {image}")
    if args.output:
        atomic_write(args.output, dumps_jsonl(records))
    print("\n".join(lines + counterexamples))
    return 0


def _score_report(spec, verdicts_by_image: dict[str, list[Verdict]], policy) -> tuple[list[dict], Any]:
    ids = [t.id for t in spec.triplets] if spec else None
    scores = {i: truth_score(vs, policy, ids) for i, vs in verdicts_by_image.items()}
    evidence = {i: satisfied_evidence(vs) for i, vs in verdicts_by_image.items()}
    return scores, rank(list(verdicts_by_image), scores, evidence)


def _group(verdicts: list[tuple[str, Verdict]]) -> dict[str, dict[str, list[Verdict]]]:
    grouped: dict[str, dict[str, list[Verdict]]] = {}
    for qid, v in verdicts:
        grouped.setdefault(qid, {}).setdefault(v.image_id, []).append(v)
    return grouped


def _summary(vs: list[Verdict]) -> list[dict]:
    return [{"triplet": v.triplet_id, "outcome": v.outcome.value,
             "error": v.error_class.value if v.error_class else None} for v in sorted(vs, key=lambda v: v.triplet_id)]


def cmd_rank(args, settings) -> int:
    spec = _load_spec(args.spec) if args.spec else None
    grouped = _group(_load_verdicts(args.verdicts))
    out = []
    for qid in sorted(grouped):
        by_image = grouped[qid]
        _, ranking = _score_report(spec, by_image, _policy(settings))
        for pos, entry in enumerate(ranked_list_to_dicts(ranking)):
            rec = {"query_id": qid, "position": pos, **entry, "triplets": _summary(by_image[entry["image_id"]])}
            out.append(rec)
    _emit(dumps_jsonl(out), args.output)
    return 0


def cmd_rerank(args, settings) -> int:
    baselines = _load_rankings(args.baseline)
    grouped = _group(_load_verdicts(args.verdicts))
    out = []
    for qid in sorted(baselines):
        if qid in grouped:
            by_image = grouped[qid]
        elif "" in grouped and len(baselines) == 1:
            by_image = grouped[""]
        else:
            raise MalformedInput(f"no verdicts for query {qid!r}", args.verdicts)
        base = BaselineRanking(qid, tuple(baselines[qid]))
        top = base.top(args.k)
        scores = {i: truth_score(vs, _policy(settings)) for i, vs in by_image.items() if i in top.entries}
        ranking = rerank(top, scores)
        for pos, entry in enumerate(ranked_list_to_dicts(ranking)):
            out.append({"query_id": qid, "position": pos, **entry,
                        "triplets": _summary(by_image.get(entry["image_id"], []))})
        for pos, image in enumerate(base.entries[args.k:], start=args.k):
            out.append({"query_id": qid, "image_id": image, "baseline_rank": pos, "beyond_top_k": True})
    _emit(dumps_jsonl(out), args.output)
    return 0


def _read_queries(path: str) -> list[QueryItem]:
    return [QueryItem.from_dict(d, f"{path}:{n}") for n, d in enumerate(read_jsonl(path), 1)]


def cmd_run(args, settings) -> int:
    queries = _read_queries(args.queries)
    corpus = _corpus(args.corpus)
    backend, backend_id = _backend(settings, args.corpus)
    p = plan(queries, corpus, vm_config(settings), _lexicon(settings), settings["fallback_composite"], backend_id)
    store = ResultStore(args.store)
    kwargs = dict(light=settings["light"], heavy=settings["heavy"])
    report = resume(store, p, backend, **kwargs) if args.resume else run(p, backend, store, **kwargs)
    atomic_write(Path(args.store) / "config.json", json.dumps(
        {"settings": settings, "plan_hash": p.hash(), "version": __version__}, indent=2, sort_keys=True) + "\n")
    results = all_results(store, p, _policy(settings))
    out = []
    for qid, r in results.items():
        rec = {"query_id": qid}
        if r.error:
            rec["error"] = r.error
        else:
            rec["ranking"] = ranked_list_to_dicts(r.ranking)
        out.append(rec)
    _emit(dumps_jsonl(out), args.output)
    print(json.dumps(report.to_dict(), sort_keys=True), file=sys.stderr)
    return 0


def cmd_eval(args, settings) -> int:
    cases = [EvalCase.from_dict(d, f"{args.cases}:{n}") for n, d in enumerate(read_jsonl(args.cases), 1)]
    systems = {}
    for item in args.systems.split(","):
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise MalformedInput(f"expected name=path, got {item!r}", "--systems")
        systems[name] = _load_rankings(path)
    if args.splits == "auto":
        base_name = args.split_system or next(iter(systems))
        if base_name not in systems:
            raise MalformedInput(f"unknown system {base_name!r}", "--split-system")
        base = systems[base_name]
        missing = [c.query_id for c in cases if c.query_id not in base]
        if missing:
            raise MissingRanking(f"system {base_name!r} has no ranking for {missing[:5]}")
        splits = build_splits(cases, {c.query_id: baseline_rank(c, base[c.query_id]) for c in cases})
    else:
        splits = SplitAssignment.from_dict(read_json(args.splits))
    table = evaluate(cases, systems, splits)
    sys.stdout.write(table.render())
    if args.output:
        doc = table.to_dict()
        doc["splits"] = splits.to_dict()
        atomic_write(args.output, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_mock_server(args, settings) -> int:
    server = MockDetectorServer(_corpus(args.corpus), args.host, args.port, args.fault or ())
    print(f"serving {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


# -- argument parsing -------------------------------------------------------

def _add_settings(p: argparse.ArgumentParser, names: Sequence[str]) -> None:
    for name in names:
        s = SETTINGS[name]
        flag = "--" + name.replace("_", "-")
        if s.type is bool:
            p.add_argument(flag, action=argparse.BooleanOptionalAction, default=None, help=s.help)
        else:
            p.add_argument(flag, type=s.type, default=None, help=f"{s.help} (default {s.default!r})")


REMOTE = ("backend", "endpoint", "timeout_ms", "retries", "max_in_flight", "cache", "replay")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vismc", description="Verify image candidates against structured query specifications.")
    parser.add_argument("--version", action="version", version=f"vismc {__version__}")
    parser.add_argument("--config", help="config file (default ./vismc.toml if present)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", help="query text to specification JSON")
    p.add_argument("--query", required=True)
    p.add_argument("-o", "--output")
    _add_settings(p, ["fallback_composite"])
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("synth", help="specification to routine programs")
    p.add_argument("--spec", required=True)
    p.add_argument("-o", "--output")
    _add_settings(p, ["lexicon"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="run routines on corpus images")
    p.add_argument("--spec", required=True)
    p.add_argument("--routines", required=True)
    p.add_argument("--corpus")
    p.add_argument("--images", help="comma-separated image ids (default: whole corpus)")
    p.add_argument("--query-id", help="tag written into each verdict record")
    p.add_argument("-o", "--output", help="verdicts JSONL")
    _add_settings(p, VM_KEYS + REMOTE)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rank", help="order images by truth score")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--spec")
    p.add_argument("-o", "--output")
    _add_settings(p, ["policy"])
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("rerank", help="re-weight a baseline top-K by truth score")
    p.add_argument("--baseline", required=True)
    p.add_argument("--verdicts", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("-o", "--output")
    _add_settings(p, ["policy"])
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("run", help="parse, synthesize, verify and rank a query set")
    p.add_argument("--queries", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--resume", action="store_true")
    p.add_argument("-o", "--output", help="rankings JSONL (default stdout)")
    _add_settings(p, VM_KEYS + REMOTE + ("light", "heavy", "policy", "fallback_composite", "lexicon"))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="Recall@K tables over Easy/Hard splits")
    p.add_argument("--cases", required=True)
    p.add_argument("--systems", required=True, help="name=rankings.jsonl[,name=...]")
    p.add_argument("--splits", default="auto", help="auto, or a split assignment JSON file")
    p.add_argument("--split-system", help="system whose ranks define the splits (default: first)")
    p.add_argument("-o", "--output", help="report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mock-server", help="serve scene annotations over the detector wire protocol")
    p.add_argument("--corpus", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--fault", action="append", help="queue a fault: drop, delay:<ms>, malformed, http500")
    p.set_defaults(func=cmd_mock_server)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        if getattr(args, "k", 1) is not None and getattr(args, "k", 1) < 1:
            raise MalformedInput("k must be at least 1", "--k")
        return args.func(args, settings)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (VismcError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

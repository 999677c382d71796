"""Command line front end.

Subcommands: ``ask`` (one question, in process or against a running server),
``serve`` (start the HTTP service), ``train`` (fit a ranker model),
``check-kb`` (parse and range-restriction report), ``bench`` (bundled
evaluation).  Exit status: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .engine import (
    DIAG_NO_ANSWER,
    Engine,
    PipelineConfig,
    default_asset,
    run_benchmark,
)
from .parsing import CorpusError, NoPatternMatch, ParseError, check_reserved, load_kb
from .ranking import SCHEMA_DIMS, LinearModel, load_model, load_training_csv, save_model, train
from .terms import atom_variables, format_clause, variables_of


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(f"{self.format_usage()}error: {message}")


_CONFIG_FLAGS: list[tuple[str, str, type]] = [
    ("--top-k-passages", "top_k_passages", int),
    ("--per-candidate-budget", "per_candidate_budget", float),
    ("--max-relax", "max_relax", int),
    ("--max-level", "max_level", int),
    ("--answers-returned", "answers_returned", int),
    ("--question-budget", "question_budget", float),
    ("--max-branches", "max_branches", int),
    ("--proof-workers", "proof_workers", int),
    ("--corpus", "corpus_path", str),
    ("--kb", "kb_path", str),
    ("--patterns", "patterns_path", str),
    ("--synonyms", "synonyms_path", str),
    ("--passage-model", "passage_model_path", str),
    ("--answer-model", "answer_model_path", str),
    ("--ui-dir", "ui_dir", str),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key=value config file")
    for flag, dest, kind in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=dest, type=kind, default=None, metavar=dest.upper())


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        base = PipelineConfig.from_file(args.config)
    else:
        base = PipelineConfig.from_env()
    overrides = {
        dest: getattr(args, dest)
        for _, dest, _ in _CONFIG_FLAGS
        if getattr(args, dest) is not None
    }
    return replace(base, **overrides) if overrides else base


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="logquest", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    ask = commands.add_parser("ask", help="answer one question")
    ask.add_argument("question")
    ask.add_argument("--answers", type=int, default=None, help="how many answers to return")
    ask.add_argument("--relax", dest="relax_override", type=int, default=None,
                     help="override max_relax for this question")
    ask.add_argument("--server", metavar="URL", help="send to a running service instead")
    ask.add_argument("--json", action="store_true", help="print the raw answer array")
    _add_config_flags(ask)
    ask.set_defaults(func=cmd_ask)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    _add_config_flags(serve)
    serve.set_defaults(func=cmd_serve)

    train_cmd = commands.add_parser("train", help="fit a ranker model from a CSV")
    train_cmd.add_argument("kind", choices=sorted(SCHEMA_DIMS))
    train_cmd.add_argument("data", help="training CSV (feature columns then 'label')")
    train_cmd.add_argument("--out", required=True, help="where to write the model")
    train_cmd.add_argument("--init", default=None, help="start from an existing model")
    train_cmd.add_argument("--lr", type=float, default=0.05)
    train_cmd.add_argument("--epochs", type=int, default=500)
    train_cmd.set_defaults(func=cmd_train)

    check = commands.add_parser("check-kb", help="parse a knowledge base and report")
    check.add_argument("path")
    check.set_defaults(func=cmd_check_kb)

    bench = commands.add_parser("bench", help="run the bundled evaluation set")
    bench.add_argument("--gold", default=None, help="question TAB answer file")
    _add_config_flags(bench)
    bench.set_defaults(func=cmd_bench)

    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _mark_spans(text: str, spans: Sequence[Sequence[int]]) -> str:
    """Bracket the highlighted byte ranges for terminal output."""
    data = text.encode("utf-8")
    pieces: list[bytes] = []
    previous = 0
    for start, end in spans:
        pieces.append(data[previous:start])
        pieces.append(b"[" + data[start:end] + b"]")
        previous = end
    pieces.append(data[previous:])
    return b"".join(pieces).decode("utf-8")


def _print_records(records: list[dict], diagnostic: Optional[str], ground: bool) -> None:
    if not records:
        if ground and diagnostic == DIAG_NO_ANSWER:
            print("No proof found")
        else:
            print(diagnostic or DIAG_NO_ANSWER)
        return
    for position, record in enumerate(records, 1):
        line = f"{position}. {record['answer_text']}   confidence {record['confidence']:.3f}"
        if record["relax_count"]:
            line += f"   relaxed x{record['relax_count']}"
        print(line)
        print(f"   [{record['passage_id']}] {_mark_spans(record['passage_text'], record['highlight_spans'])}")
        if record["dropped_subgoals"]:
            print(f"   dropped: {', '.join(record['dropped_subgoals'])}")
    if diagnostic:
        print(f"({diagnostic})")


def cmd_ask(args: argparse.Namespace) -> int:
    if args.server:
        return _ask_remote(args)
    engine = Engine(_load_config(args))
    try:
        interpreted = engine.interpret(args.question)
    except NoPatternMatch:
        print("question not understood", file=sys.stderr)
        return 1
    result = engine.ask(args.question, args.answers, args.relax_override)
    records = [r.to_dict() for r in result.records]
    if args.json:
        print(json.dumps(records, indent=2))
        if result.diagnostic:
            print(result.diagnostic, file=sys.stderr)
    else:
        _print_records(records, result.diagnostic, not interpreted.query.answer_vars)
    return 0


def _ask_remote(args: argparse.Namespace) -> int:
    import httpx

    body: dict = {"question": args.question}
    if args.answers is not None:
        body["answers"] = args.answers
    if args.relax_override is not None:
        body["max_relax"] = args.relax_override
    try:
        response = httpx.post(args.server.rstrip("/") + "/ask", json=body, timeout=60.0)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach server: {exc}", file=sys.stderr)
        return 1
    if response.status_code != 200:
        try:
            message = response.json().get("error", response.text)
        except ValueError:
            message = response.text
        print(f"error: {message}", file=sys.stderr)
        return 1
    records = response.json()
    diagnostic = response.headers.get("X-Diagnostic")
    if args.json:
        print(json.dumps(records, indent=2))
        if diagnostic:
            print(diagnostic, file=sys.stderr)
    else:
        _print_records(records, diagnostic, ground=False)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_load_config(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    data = load_training_csv(args.data, args.kind)
    if args.init:
        init = load_model(args.init)
        if init.kind != args.kind:
            print(f"error: {args.init} is a {init.kind} model", file=sys.stderr)
            return 1
    else:
        init = LinearModel.zeros(args.kind, data.features.shape[1])
    model, losses = train(init, data, args.lr, args.epochs)
    save_model(model, args.out)
    print(f"trained {args.kind} model on {data.features.shape[0]} rows")
    print(f"loss {losses[0]:.6f} -> {losses[-1]:.6f} over {len(losses)} epochs")
    print(f"wrote {args.out}")
    return 0


def cmd_check_kb(args: argparse.Namespace) -> int:
    try:
        clauses = load_kb(args.path)
        check_reserved(clauses)
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.path}: {len(clauses)} clauses")
    unguarded = 0
    for clause in clauses:
        body_vars: set[str] = set()
        for goal in clause.body:
            body_vars.update(atom_variables(goal))
        loose = [v for v in variables_of(clause.head) if v not in body_vars]
        if loose:
            unguarded += 1
            print(f"  needs dom guard for {', '.join(loose)}: {format_clause(clause)}")
    if unguarded:
        print(f"{unguarded} clauses get dom guards at load time")
    else:
        print("all clauses range-restricted")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    engine = Engine(_load_config(args))
    gold = args.gold or default_asset("eval/gold.tsv")
    report = run_benchmark(engine, gold)
    print(f"questions       {report.total}")
    print(f"accuracy@3      {report.accuracy_at_3:.3f} ({report.correct_at_3}/{report.total})")
    print(f"median latency  {report.median_latency * 1000:.0f} ms")
    print(f"p99 latency     {report.p99_latency * 1000:.0f} ms")
    if report.failures:
        print("missed:")
        for question, expected, got in report.failures:
            shown = ", ".join(got) if got else "nothing"
            print(f"  {question!r}: wanted {expected!r}, got {shown}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ParseError, CorpusError, NoPatternMatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

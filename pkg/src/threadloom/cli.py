"""Batch and scripting front door for the engine.

Each command maps 1:1 to an engine operation; the storage root comes from
``--home`` or the ``THREADLOOM_HOME`` env var. Exit code 0 on success,
nonzero with a machine-readable error code on failure. ``--output json``
emits structured output for scripting.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .docmodel import PageRect
from .engine import Engine, EngineConfig
from .errors import ThreadloomError
from .highlights import HighlightKind, ViewportTransform
from .service import serve


def _parse_rect(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rect must be x,y,w,h")
    try:
        x, y, w, h = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"rect values must be numbers: {exc}") from exc
    return x, y, w, h


def _parse_offset(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("offset must be dx,dy")
    return float(parts[0]), float(parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threadloom", description="Thread-based literature curation engine")
    parser.add_argument("--home", default=None, help="storage root (default: $THREADLOOM_HOME or ~/.threadloom)")
    parser.add_argument("--output", choices=["text", "json"], default="text")
    parser.add_argument("--expect-revision", type=int, default=None, help="optimistic check for mutations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest a parsed document (native JSON or TEI XML)")
    p.add_argument("parse_file", type=Path)
    p.add_argument("--tei", action="store_true", help="treat input as TEI XML")

    p = sub.add_parser("extract", help="extract a citation context from a page rectangle")
    p.add_argument("doc_id")
    p.add_argument("--page", type=int, required=True)
    p.add_argument("--rect", type=_parse_rect, required=True, metavar="x,y,w,h")
    p.add_argument("--scale", type=float, default=None, help="viewport render scale (default 1)")
    p.add_argument("--offset", type=_parse_offset, default=None, metavar="dx,dy")

    p = sub.add_parser("tank", help="inspect or commit the holding tank")
    tank_sub = p.add_subparsers(dest="tank_command", required=True)
    tank_sub.add_parser("show")
    ts = tank_sub.add_parser("select")
    ts.add_argument("index", type=int)
    ts = tank_sub.add_parser("deselect")
    ts.add_argument("index", type=int)
    tc = tank_sub.add_parser("commit")
    mode = tc.add_mutually_exclusive_group(required=True)
    mode.add_argument("--new", metavar="LABEL", help="create a new thread from the tank")
    mode.add_argument("--refs-to", metavar="THREAD_ID", help="add selected references to a thread")
    mode.add_argument("--clip-to", metavar="THREAD_ID", help="add the tank content as a clip")

    p = sub.add_parser("thread", help="manage threads")
    thread_sub = p.add_subparsers(dest="thread_command", required=True)
    thread_sub.add_parser("ls")
    tn = thread_sub.add_parser("new")
    tn.add_argument("label")
    tn.add_argument("--parent", default=None)
    tm = thread_sub.add_parser("mv")
    tm.add_argument("thread_id")
    tm.add_argument("--parent", default=None, help="new parent thread id; omit for top level")
    tm.add_argument("--position", type=int, default=None)
    tr = thread_sub.add_parser("rm")
    tr.add_argument("thread_id")
    tr.add_argument("--confirm", action="store_true")
    tre = thread_sub.add_parser("rename")
    tre.add_argument("thread_id")
    tre.add_argument("label")

    p = sub.add_parser("suggest", help="rank threads for a piece of text")
    p.add_argument("text")
    p.add_argument("-k", type=int, default=None)

    p = sub.add_parser("recommend", help="paper recommendations for a thread")
    p.add_argument("thread_id")
    p.add_argument("--refresh", action="store_true")

    p = sub.add_parser("export", help="export a thread outline")
    p.add_argument("thread_id")
    p.add_argument("--format", choices=["outline"], default="outline")

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--bind", default=None)

    return parser


def _home(args) -> Path:
    if args.home:
        return Path(args.home)
    env = os.environ.get("THREADLOOM_HOME")
    if env:
        return Path(env)
    return Path.home() / ".threadloom"


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.output == "json":
        print(json.dumps(payload, sort_keys=True, ensure_ascii=False))
    else:
        for line in text_lines:
            print(line)


def _drawer_lines(drawer: list[dict], depth: int = 0) -> list[str]:
    lines = []
    for entry in drawer:
        pad = "  " * depth
        bits = []
        if entry["clip_counter"]:
            bits.append(entry["clip_counter"])
        if entry["papers"]:
            bits.append(f"{len(entry['papers'])} papers")
        suffix = f"  ({'; '.join(bits)})" if bits else ""
        lines.append(f"{pad}{entry['thread_id']}  {entry['label']}{suffix}")
        for paper in entry["papers"]:
            marker = " *current*" if paper.get("is_current") else ""
            lines.append(f"{pad}    - {paper.get('title') or paper.get('paper_id')}{marker}")
        lines.extend(_drawer_lines(entry["children"], depth + 1))
    return lines


def _tank_lines(tank: dict) -> list[str]:
    lines = []
    ctx = tank.get("context")
    if ctx is None and not tank.get("image_clip"):
        return ["tank: empty"]
    if ctx:
        lines.append(f"context {ctx['context_id']}: \"{ctx['text']}\"")
        selected = set(tank.get("selected", []))
        for i, ref in enumerate(ctx.get("resolved", [])):
            mark = "x" if i in selected else " "
            bib = ref.get("bib") or {}
            paper = ref.get("paper") or {}
            title = paper.get("title") or bib.get("title") or bib.get("raw_text") or "(unresolved)"
            reason = f" [{ref['reason']}]" if ref.get("reason") else ""
            surface = ref["marker"]["surface"]
            lines.append(f"  [{mark}] {i}: {surface} -> {title}{reason}")
    if tank.get("image_clip"):
        clip = tank["image_clip"]
        lines.append(f"image clip: page {clip['page']} ({len(clip['image_hex']) // 2} bytes)")
    return lines


def _run(args) -> int:
    home = _home(args)
    config = EngineConfig.load(home)
    engine = Engine(config)
    expected = args.expect_revision

    if args.command == "ingest":
        raw = args.parse_file.read_bytes()
        tei = args.tei or args.parse_file.suffix.lower() in (".xml", ".tei")
        result = engine.ingest(raw, tei=tei, expected_revision=expected)
        _emit(args, result, [f"ingested {result['doc_id']} ({result['sentences']} sentences) revision {result['revision']}"])
        return 0

    if args.command == "extract":
        x, y, w, h = args.rect
        rects = [PageRect(page=args.page, x=x, y=y, w=w, h=h)]
        transform = None
        if args.scale is not None or args.offset is not None:
            offset = args.offset or (0.0, 0.0)
            transform = ViewportTransform(render_scale=args.scale or 1.0, page_offsets={args.page: offset})
        result = engine.highlight(args.doc_id, rects, kind=HighlightKind.TEXT, transform=transform, expected_revision=expected)
        lines = _tank_lines(result["tank"])
        if result["suggestions"]:
            lines.append("suggestions:")
            lines.extend(
                f"  {s['thread_id']}  {s['label']}  score={s['score']:.4f}" for s in result["suggestions"]
            )
        _emit(args, result, lines)
        return 0

    if args.command == "tank":
        if args.tank_command == "show":
            state = engine.tank_state()
            _emit(args, {"tank": state, "revision": engine.workspace.revision}, _tank_lines(state))
            return 0
        if args.tank_command in ("select", "deselect"):
            result = engine.tank_select(args.index, args.tank_command == "select", expected_revision=expected)
            _emit(args, result, _tank_lines(result["tank"]))
            return 0
        mode, target, label = "NEW_THREAD", None, None
        if args.new is not None:
            label = args.new
        elif args.refs_to is not None:
            mode, target = "REFS_TO", args.refs_to
        else:
            mode, target = "CLIP_TO", args.clip_to
        result = engine.tank_commit(mode, target=target, label=label, expected_revision=expected)
        _emit(args, result, [f"committed to {result['thread_id']} revision {result['revision']}"] + _drawer_lines(result["drawer"]))
        return 0

    if args.command == "thread":
        if args.thread_command == "ls":
            drawer = engine.drawer()
            _emit(args, {"drawer": drawer, "revision": engine.workspace.revision}, _drawer_lines(drawer))
            return 0
        if args.thread_command == "new":
            result = engine.create_thread(args.label, parent=args.parent, expected_revision=expected)
            _emit(args, result, [f"created {result['thread_id']} revision {result['revision']}"])
            return 0
        if args.thread_command == "mv":
            result = engine.move_thread(args.thread_id, args.parent, position=args.position, expected_revision=expected)
            _emit(args, result, _drawer_lines(result["drawer"]))
            return 0
        if args.thread_command == "rm":
            result = engine.delete_thread(args.thread_id, confirm=args.confirm, expected_revision=expected)
            _emit(args, result, [f"deleted {args.thread_id} revision {result['revision']}"])
            return 0
        result = engine.rename_thread(args.thread_id, args.label, expected_revision=expected)
        _emit(args, result, [f"renamed {args.thread_id} revision {result['revision']}"])
        return 0

    if args.command == "suggest":
        suggestions = engine.suggest(args.text, k=args.k)
        _emit(
            args,
            {"suggestions": suggestions},
            [f"{s['thread_id']}  {s['label']}  score={s['score']:.4f}" for s in suggestions] or ["no suggestions"],
        )
        return 0

    if args.command == "recommend":
        result = engine.recommend(args.thread_id, refresh=args.refresh)
        lines = [
            f"{r['rank']}. {r['paper']['title']} ({r['paper']['year']}) coverage={r['coverage_count']}"
            for r in result["recommendations"]
        ] or ["no recommendations"]
        _emit(args, result, lines)
        return 0

    if args.command == "export":
        outline = engine.export_outline(args.thread_id)
        if args.output == "json":
            print(json.dumps({"outline": outline}, sort_keys=True, ensure_ascii=False))
        else:
            sys.stdout.write(outline)
        return 0

    if args.command == "serve":
        serve(engine, bind=args.bind, port=args.port)
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ThreadloomError as exc:
        if args.output == "json":
            print(json.dumps({"error": {"code": exc.code, "message": exc.message}}, sort_keys=True), file=sys.stderr)
        else:
            print(f"error {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error FILE_NOT_FOUND: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

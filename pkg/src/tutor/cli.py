"""Command-line entry points: ingest materials, serve the API, analyze logs."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import analytics
from .config import RuntimeConfig, load_service_config, runtime_config_from_dict
from .errors import TutorError
from .kb import ChunkingPolicy, ingest_materials, load_index, save_index
from .provider import (HashedTfEmbeddingProvider, HttpChatProvider, MockChatProvider,
                       ProviderConfig)
from .service import TaskStore, TutorService
from .telemetry import InteractionLog, read_log_dir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tutor",
                                     description="Course-aware tutoring service tools")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="chunk and embed course materials into an index")
    ingest.add_argument("--materials", required=True, help="directory of plain-text materials")
    ingest.add_argument("--out", required=True, help="index file to write")
    ingest.add_argument("--chunk-size", type=int, default=1200)
    ingest.add_argument("--overlap", type=int, default=200)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="service config JSON file")
    serve.add_argument("--index", required=True, help="vector index file")
    serve.add_argument("--tasks", required=True, help="task descriptions JSON file")
    serve.add_argument("--log", required=True, help="interaction log directory")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    analyze = sub.add_parser("analyze", help="offline interaction-log analysis")
    analyze_sub = analyze.add_subparsers(dest="analyze_command", required=True)

    merge = analyze_sub.add_parser("merge", help="merge rapid-fire prompts")
    merge.add_argument("--log", required=True, help="interaction log directory")
    merge.add_argument("--window", type=float, default=analytics.DEFAULT_MERGE_WINDOW_SECONDS,
                       help="merge window in seconds")
    merge.add_argument("--out", required=True, help="merged interactions JSON file")

    tag = analyze_sub.add_parser("tag", help="tag one merged interaction")
    tag.add_argument("--merged", required=True, help="merged interactions JSON file")
    tag.add_argument("--id", required=True, dest="merged_id")
    tag.add_argument("--category", required=True,
                     help="one of: " + ", ".join(analytics.CATEGORIES))
    tag.add_argument("--tags", default=None,
                     help="tag table file (default: <merged>.tags.json)")

    stats = analyze_sub.add_parser("stats", help="category distribution of tagged interactions")
    stats.add_argument("--merged", required=True)
    stats.add_argument("--tags", required=True)
    stats.add_argument("--format", choices=("table", "csv", "json"), default="table")
    stats.add_argument("--awareness", default=None,
                       choices=("none", "task", "code", "task_and_code"),
                       help="only count interactions logged at this awareness level")

    return parser


def _cmd_ingest(args) -> int:
    policy = ChunkingPolicy(chunk_size=args.chunk_size, overlap=args.overlap)
    provider = HashedTfEmbeddingProvider()
    index = ingest_materials(args.materials, provider, policy)
    save_index(index, args.out)
    print(f"ingested {len(index)} chunks (dimension {index.dimension}) -> {args.out}")
    return 0


def build_service(config_path: str | Path, index_path: str | Path,
                  tasks_path: str | Path, log_dir: str | Path) -> TutorService:
    """Assemble a service from its on-disk pieces (shared by serve and tests)."""
    raw = load_service_config(config_path)
    runtime_fields = dict(raw.get("runtime", {}))
    template_file = raw.get("system_prompt_template_file")
    if template_file:
        template_path = Path(template_file)
        if not template_path.is_absolute():
            template_path = Path(config_path).parent / template_path
        runtime_fields["system_prompt_template"] = template_path.read_text(encoding="utf-8")
    runtime: RuntimeConfig = runtime_config_from_dict(runtime_fields)
    provider_spec = raw.get("provider", {"kind": "mock", "script": ["Here is a hint."]})
    kind = provider_spec.get("kind", "mock")
    if kind == "mock":
        chat = MockChatProvider(provider_spec.get("script") or ["Here is a hint."])
    elif kind == "http":
        api_key = os.environ.get("TUTOR_API_KEY", provider_spec.get("api_key", ""))
        chat = HttpChatProvider(ProviderConfig(
            endpoint_url=provider_spec["endpoint_url"],
            api_key=api_key,
            model_name=provider_spec.get("model_name", "course-tutor"),
            temperature=float(provider_spec.get("temperature", 0.2)),
            max_tokens=int(provider_spec.get("max_tokens", 800)),
        ))
    else:
        raise TutorError(f"unknown provider kind {kind!r}")
    return TutorService(
        index=load_index(index_path),
        chat_provider=chat,
        embedder=HashedTfEmbeddingProvider(),
        config=runtime,
        tasks=TaskStore(tasks_path),
        log=InteractionLog(log_dir, fsync=raw.get("fsync", "never")),
        retrieval_k=int(raw.get("retrieval_k", 4)),
    )


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    service = build_service(args.config, args.index, args.tasks, args.log)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_merge(args) -> int:
    records = [rec for rec in read_log_dir(args.log) if rec.get("event") == "interaction"]
    records.sort(key=lambda rec: (rec["thread_id"], rec["timestamp"]))
    merged = analytics.merge_interactions(records, args.window)
    analytics.save_merged(merged, args.out)
    print(f"merged {len(records)} records into {len(merged)} interactions -> {args.out}")
    return 0


def _cmd_tag(args) -> int:
    merged = analytics.load_merged(args.merged)
    tags_path = args.tags or f"{args.merged}.tags.json"
    tags = analytics.load_tags(tags_path)
    tags = analytics.tag_interaction(tags, merged, args.merged_id, args.category)
    analytics.save_tags(tags, tags_path)
    print(f"tagged {args.merged_id} as {args.category} -> {tags_path}")
    return 0


def _cmd_stats(args) -> int:
    merged = analytics.load_merged(args.merged)
    tags = analytics.load_tags(args.tags)
    stats = analytics.category_stats(merged, tags, awareness=args.awareness)
    sys.stdout.write(analytics.format_stats(stats, args.format))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "analyze":
            if args.analyze_command == "merge":
                return _cmd_merge(args)
            if args.analyze_command == "tag":
                return _cmd_tag(args)
            if args.analyze_command == "stats":
                return _cmd_stats(args)
    except TutorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: ingest, index, partition, query, eval, serve."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from sparse_rag.chunking import HashingEmbedder, RemoteEmbedder, chunk_text, embed_chunks, with_metadata
from sparse_rag.config import ConfigError, EngineConfig, load_config
from sparse_rag.evaluation import LLMJudge, RuleJudge, evaluate, load_cases
from sparse_rag.ingest import crawl, read_corpus, write_corpus
from sparse_rag.partition import partition
from sparse_rag.pipeline import ExtractiveGenerator, LLMGenerator, RagPipeline, RejectInsufficientValidator, RemoteLLM
from sparse_rag.storage import LoadedIndex, load_index, save_index

logger = logging.getLogger("sparse_rag")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def make_embedder(config: EngineConfig):
    if config.provider == "remote":
        if not config.embedding_endpoint:
            raise ConfigError("remote provider needs embedding_endpoint")
        return RemoteEmbedder(config.embedding_endpoint, config.dim, config.embedding_api_key_env or None)
    return HashingEmbedder(dim=config.dim, seed=config.seed)


def make_backends(config: EngineConfig):
    """Generator and validator for the configured LLM mode."""
    if config.llm == "remote":
        if not config.llm_endpoint:
            raise ConfigError("remote llm needs llm_endpoint")
        llm = RemoteLLM(config.llm_endpoint, config.llm_api_key_env or None)
        return LLMGenerator(llm), llm
    return ExtractiveGenerator(), RejectInsufficientValidator()


def build_pipeline(loaded: LoadedIndex, config: EngineConfig) -> RagPipeline:
    if loaded.corpus is None:
        raise RuntimeError("index is not partitioned; run `partition` first")
    generator, validator = make_backends(config)
    return RagPipeline(
        loaded.corpus,
        loaded.lexical,
        loaded.dense,
        make_embedder(config),
        generator,
        validator,
        config=config.pipeline_config(),
    )


def _index_config(loaded: LoadedIndex, args) -> EngineConfig:
    config = load_config(args.config) if args.config else loaded.config
    if getattr(args, "llm", None):
        config = dataclasses.replace(config, llm=args.llm)
    return config


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    delay = config.delay if args.delay is None else args.delay
    docs = crawl(args.seed, args.depth, same_host_only=not args.all_hosts, delay=delay)
    manifest = write_corpus(docs, args.out)
    print(f"wrote {len(docs)} pages, manifest {manifest}")
    return EXIT_OK


def cmd_index(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.chunk_size is not None:
        overrides["chunk_size"] = args.chunk_size
    if args.overlap is not None:
        overrides["overlap"] = args.overlap
    if args.provider is not None:
        overrides["provider"] = args.provider
    config = dataclasses.replace(config, **overrides)

    docs = read_corpus(args.input)
    chunks = [c for doc in docs for c in chunk_text(doc, config.chunk_size, config.overlap)]
    if not chunks:
        raise RuntimeError(f"no text found in {args.input}")
    chunks = embed_chunks(with_metadata(chunks), make_embedder(config), batch_size=config.batch_size)
    save_index(args.out, chunks, config)
    print(f"indexed {len(chunks)} chunks from {len(docs)} documents into {args.out}")
    return EXIT_OK


def cmd_partition(args) -> int:
    loaded = load_index(args.index)
    config = loaded.config
    tau = config.tau if args.tau is None else args.tau
    criterion = config.criterion if args.criterion is None else args.criterion
    pc = partition(loaded.chunks, tau=tau, criterion=criterion)
    config = dataclasses.replace(config, tau=tau, criterion=pc.criterion.value)
    save_index(args.index, pc, config)
    print(f"|S|={len(pc.sparse_ids)} |R|={len(pc.rest_ids)}")
    return EXIT_OK


def cmd_query(args) -> int:
    loaded = load_index(args.index)
    config = _index_config(loaded, args)
    pipeline = build_pipeline(loaded, config)
    outcome = pipeline.answer(" ".join(args.text), top_k=args.top_k)
    print(f"answer: {outcome.answer}")
    print(f"path: {outcome.path}")
    print("chunks: " + " ".join(r.chunk_id for r in outcome.supporting))
    return EXIT_OK


def cmd_eval(args) -> int:
    cases = load_cases(args.cases)
    if args.judge == "remote":
        config = load_config(args.config)
        if not config.llm_endpoint:
            raise ConfigError("remote judge needs llm_endpoint in the config")
        judge = LLMJudge(RemoteLLM(config.llm_endpoint, config.llm_api_key_env or None))
    else:
        judge = RuleJudge()
    report = evaluate(cases, judge)
    Path(args.out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    print(report.table())
    return EXIT_OK


def cmd_serve(args) -> int:
    from sparse_rag.service import serve

    loaded = load_index(args.index)
    config = _index_config(loaded, args)
    serve(build_pipeline(loaded, config), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-rag", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="crawl a site into cleaned text files")
    p.add_argument("--seed", required=True)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--delay", type=float)
    p.add_argument("--all-hosts", action="store_true", help="follow links to other hosts")
    p.add_argument("--config")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="chunk and embed a text corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--overlap", type=int)
    p.add_argument("--provider", choices=["local", "remote"])
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("partition", help="split an index into sparse and rest subsets")
    p.add_argument("--index", required=True)
    p.add_argument("--tau", type=float)
    p.add_argument("--criterion", choices=["embedding", "ngram", "embedding_similarity", "ngram_containment"])
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("query", help="answer one query against a partitioned index")
    p.add_argument("--index", required=True)
    p.add_argument("--top-k", type=int)
    p.add_argument("--llm", choices=["local", "remote"])
    p.add_argument("--config")
    p.add_argument("text", nargs="+")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score evaluation cases")
    p.add_argument("--cases", required=True)
    p.add_argument("--judge", choices=["rule", "remote"], default="rule")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP query service")
    p.add_argument("--index", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--llm", choices=["local", "remote"])
    p.add_argument("--config")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Subcommands::

    kgforge index build --entities DUMP --properties DUMP --out DIR
    kgforge construct --index DIR --in TEXT [--out FILE] [--gazetteer TSV]
                      [--patterns TSV] [--config FILE]
    kgforge eval --index DIR --dataset JSONL --report PATH [--gazetteer TSV]
                 [--patterns TSV] [--config FILE]
    kgforge serve --config FILE

Exit codes: 0 on success, 2 on usage errors, 1 on runtime failures.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import AppConfig, ConfigError, build_constructor
from .evaluation import (
    DatasetError,
    load_dataset,
    render_table,
    report_json,
    run_evaluation,
)
from .fusion import PipelineError
from .index import DumpError, build_index_directory, load_index
from .model import to_ntriples

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgforge",
        description="Construct, edit and evaluate text-grounded knowledge "
                    "graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    index = sub.add_parser("index", help="index maintenance")
    index_sub = index.add_subparsers(dest="index_command", required=True)
    build = index_sub.add_parser("build",
                                 help="ingest dumps into an index directory")
    build.add_argument("--entities", required=True,
                       help="entity dump (JSON lines)")
    build.add_argument("--properties", required=True,
                       help="property dump (JSON lines)")
    build.add_argument("--out", required=True, help="output directory")

    construct = sub.add_parser("construct",
                               help="build a graph from a text file")
    construct.add_argument("--index", required=True, help="index directory")
    construct.add_argument("--in", dest="input", required=True,
                           help="input text file")
    construct.add_argument("--out", help="write N-Triples here instead of "
                                         "stdout")
    construct.add_argument("--gazetteer", help="gazetteer TSV for the "
                                               "reference recognizer")
    construct.add_argument("--patterns", help="pattern table TSV for the "
                                              "reference extractor")
    construct.add_argument("--config", help="JSON config with pipeline "
                                            "settings")

    evaluate = sub.add_parser("eval", help="run the evaluation harness")
    evaluate.add_argument("--index", required=True, help="index directory")
    evaluate.add_argument("--dataset", required=True,
                          help="evaluation dataset (JSON lines)")
    evaluate.add_argument("--report", required=True,
                          help="write machine-readable metrics here")
    evaluate.add_argument("--gazetteer", help="gazetteer TSV")
    evaluate.add_argument("--patterns", help="pattern table TSV")
    evaluate.add_argument("--config", help="JSON config with pipeline "
                                           "settings")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="JSON config file")
    return parser


def _pipeline_config(args) -> AppConfig:
    config = AppConfig.load(getattr(args, "config", None))
    config.index_dir = args.index
    if getattr(args, "gazetteer", None):
        config.gazetteer = args.gazetteer
    if getattr(args, "patterns", None):
        config.patterns = args.patterns
    config.check_paths()
    return config


def _cmd_index_build(args) -> int:
    entity_stats, property_stats = build_index_directory(
        args.entities, args.properties, args.out)
    for kind, stats in (("entities", entity_stats),
                        ("properties", property_stats)):
        rejected = ", ".join(f"{rule}={count}"
                             for rule, count in stats.rejected.items()
                             if count)
        suffix = f" (rejected: {rejected})" if rejected else ""
        print(f"{kind}: kept {stats.kept} of {stats.read}{suffix}")
    print(f"index written to {args.out}")
    return 0


def _cmd_construct(args) -> int:
    config = _pipeline_config(args)
    constructor = build_constructor(config)
    text = Path(args.input).read_text(encoding="utf-8")
    graph = constructor.construct(text)
    body = to_ntriples(graph)
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
        print(f"{len(graph)} triple(s) written to {args.out}")
    else:
        sys.stdout.write(body)
    return 0


def _cmd_eval(args) -> int:
    config = _pipeline_config(args)
    constructor = build_constructor(config)
    records = load_dataset(args.dataset)
    report = run_evaluation(records, constructor)
    print(render_table(report))
    Path(args.report).write_text(
        json.dumps(report_json(report), indent=2) + "\n", encoding="utf-8")
    print(f"report written to {args.report}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = AppConfig.load(args.config)
    config.check_paths()
    if config.session_dir is None:
        raise ConfigError("session_dir is required to serve")
    app = create_app(config)
    host, port = config.host_port
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    commands = {
        "index": _cmd_index_build,
        "construct": _cmd_construct,
        "eval": _cmd_eval,
        "serve": _cmd_serve,
    }
    try:
        return commands[args.command](args)
    except (ConfigError, DumpError, DatasetError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

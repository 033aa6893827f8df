"""Command line entry point.

Exit codes: 0 success; 2 bad config or arguments; 3 missing prior stage
output; 4 backend or cache failure; 1 internal error.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .classifier import BackendError, CacheWriteFailure
from .config import ConfigError, PipelineConfig, load_config
from .errors import StancelabError

STAGES = (
    "ingest",
    "segment",
    "filter",
    "classify",
    "annotate",
    "agree",
    "evaluate",
    "analyze",
    "report",
    "all",
)

_HELP = {
    "ingest": "load the manifest and canonicalize document text",
    "segment": "split documents into sentences",
    "filter": "keep sentences naming a device term and an evidence term",
    "classify": "label evidence sentences with the configured backend",
    "annotate": "serve the dual-annotator labeling UI",
    "agree": "compute inter-annotator agreement from the event log",
    "evaluate": "score model labels against adjudicated gold labels",
    "analyze": "run the country-by-stance contingency analysis",
    "report": "render the per-corpus breakdown table",
    "all": "run ingest through report (skips annotate/agree/evaluate)",
}


def _run_annotate(cfg: PipelineConfig) -> int:
    from . import annot_server

    sessions, texts = pipeline.annotation_sessions(cfg)
    store = annot_server.AnnotationStore(cfg.work_dir / pipeline.SESSIONS, texts)
    a = sessions[cfg.annotator_a]
    b = sessions[cfg.annotator_b]
    store.add_session(a.session_id, a.annotator_id, a.items)
    store.add_session(b.session_id, b.annotator_id, b.items)

    # Once both annotators are done, disagreements become labelable through a
    # third session; items already adjudicated in the log come first.
    adj = sessions.get(pipeline.ADJUDICATION_SESSION)
    adj_items = list(adj.items) if adj is not None else []
    if a.complete and b.complete:
        for sid in a.items:
            if a.labels[sid] is not b.labels[sid] and sid not in adj_items:
                adj_items.append(sid)
    if adj_items:
        store.add_session(pipeline.ADJUDICATION_SESSION, pipeline.ADJUDICATION_SESSION, adj_items)

    store.replay_log()
    print(f"serving on http://{cfg.host}:{cfg.port}/ (sessions: {', '.join(store.session_ids())})")
    annot_server.serve(store, cfg.host, cfg.port, static_dir=cfg.static_dir)
    return 0


def run_subcommand(name: str, cfg: PipelineConfig) -> int:
    if name == "ingest":
        pipeline.stage_ingest(cfg)
    elif name == "segment":
        pipeline.stage_segment(cfg)
    elif name == "filter":
        pipeline.stage_filter(cfg)
    elif name == "classify":
        pipeline.stage_classify(cfg)
    elif name == "annotate":
        return _run_annotate(cfg)
    elif name == "agree":
        pipeline.stage_agree(cfg)
    elif name == "evaluate":
        pipeline.stage_evaluate(cfg)
    elif name == "analyze":
        pipeline.stage_analyze(cfg)
    elif name == "report":
        pipeline.stage_report(cfg)
    elif name == "all":
        pipeline.run_all(cfg)
    else:
        raise ValueError(f"unknown subcommand {name!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stancelab",
        description="Stance analysis pipeline for policy document corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        stage = sub.add_parser(name, help=_HELP[name])
        stage.add_argument("--config", required=True, help="path to a key=value config file")
        stage.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config value (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=args.overrides)
        return run_subcommand(args.command, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except pipeline.MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (BackendError, CacheWriteFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except StancelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort guard for the CLI
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

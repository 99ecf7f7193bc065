"""Command-line entry points: serve the gateway, lint the lexicon, export analytics."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .guardrails import TaskTheme
from .store import SessionStore, load_pilot_fixture, replay_pilot_fixture


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import AppConfig, create_app

    host, _, port = args.bind.partition(":")
    config = AppConfig(
        corpus_dir=Path(args.corpus) if args.corpus else None,
        data_dir=Path(args.data),
        lang_default=args.lang_default,
        ui_dir=Path(args.ui) if args.ui else None,
    )
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def _cmd_lexicon_lint(args) -> int:
    root = Path(args.corpus) if args.corpus else corpus_mod.default_corpus_root()
    try:
        corpus = corpus_mod.load_corpus(root)
    except corpus_mod.CorpusError as exc:
        print(f"lexicon lint failed: {exc}", file=sys.stderr)
        return 1
    for theme in TaskTheme:
        rules = corpus.rules_for_theme(theme.value)
        print(f"{theme.value}: {len(rules)} active rules")
        if args.verbose:
            for rule in rules:
                print(f"  {rule.rule_id} ({rule.action}, tier {rule.tier})")
    print("lexicon OK")
    return 0


def _cmd_export_summary(args) -> int:
    store = SessionStore(Path(args.data))
    if args.fixture:
        replay_pilot_fixture(store, load_pilot_fixture())
    summaries = store.compute_summary()
    print("theme\tparticipants\titerations_mean\titerations_sd\timages_mean\timages_sd")
    for s in summaries:
        print(
            f"{s.theme}\t{s.participants}\t{s.iterations_mean:.3f}\t{s.iterations_sd:.3f}"
            f"\t{s.images_mean:.3f}\t{s.images_sd:.3f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heritage-studio")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP gateway")
    serve.add_argument("--corpus", default="", help="corpus directory (default: bundled)")
    serve.add_argument("--data", default="data", help="session/image data directory")
    serve.add_argument("--bind", default="127.0.0.1:8000", help="host:port to listen on")
    serve.add_argument("--lang-default", default="zh", choices=("zh", "en"))
    serve.add_argument("--ui", default="", help="directory with the built studio frontend")
    serve.set_defaults(func=_cmd_serve)

    lint = sub.add_parser("lexicon-lint", help="validate lexicon rule files")
    lint.add_argument("--corpus", default="", help="corpus directory (default: bundled)")
    lint.add_argument("--verbose", action="store_true")
    lint.set_defaults(func=_cmd_lexicon_lint)

    export = sub.add_parser("export-summary", help="print per-theme usage analytics")
    export.add_argument("--data", default="data", help="session data directory")
    export.add_argument(
        "--fixture", action="store_true", help="replay the bundled pilot fixture first"
    )
    export.set_defaults(func=_cmd_export_summary)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

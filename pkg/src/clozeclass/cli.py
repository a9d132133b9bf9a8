"""Command-line entry point: staged pipeline with deterministic seeds.

Exit codes: 0 success, 2 validation error, 3 transport error, 4 numeric
divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import (
    ClozeClassError,
    DivergenceError,
    TransportError,
    ValidationError,
)
from .pipeline import STAGES, run_pipeline, run_stage
from .synthetic import generate

log = logging.getLogger("clozeclass")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRANSPORT = 3
EXIT_DIVERGENCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clozeclass",
        description=(
            "Weakly supervised text classification: cloze-prompt signal "
            "words, similarity pseudo labels, ratio filtering, and joint "
            "latent-class training."
        ),
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", required=True, help="path to the pipeline YAML config"
    )
    common.add_argument(
        "--force",
        action="store_true",
        help="rerun even when the manifest says inputs are unchanged",
    )
    common.add_argument(
        "--seed", type=int, default=None, help="override the configured seed"
    )
    common.add_argument(
        "--offline",
        action="store_true",
        help="serve every request from the caches; never touch the network",
    )

    for stage in STAGES:
        sub.add_parser(
            stage, parents=[common], help=f"run the {stage} stage"
        )
    sub.add_parser(
        "pipeline", parents=[common], help="run every stage in order"
    )

    synth = sub.add_parser(
        "synth", help="generate the bundled synthetic corpus and caches"
    )
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=7)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            config_path = generate(args.out, seed=args.seed)
            log.info("synthetic corpus ready; config at %s", config_path)
            return EXIT_OK
        config = load_config(args.config, seed=args.seed, offline=args.offline)
        if args.command == "pipeline":
            run_pipeline(config, force=args.force)
        else:
            run_stage(args.command, config, force=args.force)
        return EXIT_OK
    except DivergenceError as exc:
        log.error("training diverged: %s", exc)
        return EXIT_DIVERGENCE
    except TransportError as exc:
        log.error("transport failure: %s", exc)
        return EXIT_TRANSPORT
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except ClozeClassError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

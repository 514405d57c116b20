import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from typing import List, Optional, Text

import ujson

logger = logging.getLogger("shiftmpc.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2
EXIT_CAP_REACHED = 3


def make_parser():
    """
    Generate the parser for all sub-commands
    """

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON or Python config")
    common.add_argument("--out", default=None, help="Root of the run directories")
    common.add_argument("--seed", type=int, default=None, help="Overrides the config")
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker processes for sweeps (default: one per core)",
    )
    common.add_argument("--verbose", action="store_true", help="Log debug output")

    parser = argparse.ArgumentParser(description="Shift-invariant basis MPC")
    sp = parser.add_subparsers(help="Sub-command")

    for action, help_ in (
        ("inspect", "Inspect a basis-function family"),
        ("nmax", "Compute the admissible horizon N_max"),
        ("run", "Simulate one closed loop"),
        ("sweep", "Run a parameter sweep"),
    ):
        sub = sp.add_parser(action, help=help_, parents=[common])
        sub.set_defaults(action=action)

    parser_schema = sp.add_parser("schema", help="Print the config JSON schema")
    parser_schema.set_defaults(action="schema")

    return parser


def init_logger(verbose: bool = False):
    from shiftmpc.conf import settings

    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def init_sentry():
    from shiftmpc.conf import settings

    if settings.SENTRY_DSN:
        import sentry_sdk

        sentry_sdk.init(dsn=settings.SENTRY_DSN)


def make_run_dir(root: Optional[Text], name: Text, action: Text) -> Text:
    """
    Create `<root>/<name>-<action>-<UTC timestamp>`, with a counter suffix
    if two runs start within the same second.
    """

    from shiftmpc.conf import settings

    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    base = os.path.join(root or settings.OUTPUT_DIR, f"{name}-{action}-{stamp}")
    path, i = base, 1

    while os.path.exists(path):
        path = f"{base}-{i}"
        i += 1

    os.makedirs(path)
    return path


def execute(args) -> int:
    from shiftmpc.admissible import NmaxCapReached
    from shiftmpc.core import ShiftMpcError

    from . import commands
    from .config import ConfigError, config_schema, load_config

    if args.action == "schema":
        print(ujson.dumps(config_schema(), indent=2))
        return EXIT_OK

    try:
        config = load_config(args.config)

        if args.seed is not None:
            config = config.model_copy(update={"seed": args.seed})

        out_dir = make_run_dir(args.out or config.output, config.name, args.action)

        with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as f:
            f.write(ujson.dumps(config.resolved(), indent=2))

        if args.action == "inspect":
            report = commands.cmd_inspect(config, out_dir)
        elif args.action == "nmax":
            report = commands.cmd_nmax(config, out_dir)
        elif args.action == "run":
            report = commands.cmd_run(config, out_dir)
        else:
            report = commands.cmd_sweep(config, out_dir, workers=args.workers)
    except ConfigError as e:
        logger.error("Invalid config %s: %s", args.config, e)
        print(f"Invalid config at {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except NmaxCapReached as e:
        logger.error("%s", e)
        return EXIT_CAP_REACHED
    except (ShiftMpcError, OSError) as e:
        logger.error("%s failed: %s", args.action, e)
        return EXIT_FAILURE
    except Exception as e:
        logger.exception("Something bad happened during %s", args.action)

        import sentry_sdk

        sentry_sdk.capture_exception(e)
        return EXIT_FAILURE

    from shiftmpc.utils import to_jsonable

    print(ujson.dumps(to_jsonable(report), indent=2))
    logger.info("Artifacts written to %s", out_dir)

    return EXIT_OK


def main(argv: Optional[List[Text]] = None) -> int:
    """
    Run the appropriate sub-command according to the output of the parser.
    """

    parser = make_parser()
    args = parser.parse_args(argv)

    if not hasattr(args, "action"):
        parser.print_help()
        return EXIT_FAILURE

    init_logger(getattr(args, "verbose", False))
    init_sentry()

    return execute(args)

"""`mm limit`: generalized measures of a family against log of its sup norm."""

import logging

logger = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "commands": {
        "limit": {
            "enabled": True,
            "max_n": 10,
        }
    }
}

COLUMNS = ("command", "input", "n", "value", "log_sup", "gap", "seed", "wall_ms")


def add_arguments(parser) -> None:
    parser.add_argument("--family", required=True, choices=("1mx", "one_minus_x", "ratio", "golden"))
    parser.add_argument("--max-n", type=int, dest="max_n", help="largest n in the table")


def on_load(app) -> None:
    app.commands.register_command(
        "limit",
        "limit",
        handle,
        help_text="Table of m(P(x_1), ..., P(x_n)) approaching log of the sup norm.",
        add_arguments=add_arguments,
    )


async def handle(app, args) -> int:
    from core.command_manager import CommandError
    from core.genmm import limit_table
    from core.utils import get_command_config, run_blocking

    max_n = args.max_n
    if max_n is None:
        max_n = int(get_command_config(app, "limit").get("max_n", 10))
    if max_n < 1:
        raise CommandError("--max-n must be at least 1")

    start = app.start_timer()
    table = await run_blocking(limit_table, args.family, max_n)
    wall_ms = app.elapsed_ms(start)
    rows = [
        {
            "command": "limit",
            "input": args.family,
            "n": row["n"],
            "value": row["value"],
            "log_sup": row["log_sup"],
            "gap": row["gap"],
            "seed": app.seed,
            "wall_ms": wall_ms,
        }
        for row in table
    ]
    logger.info("limit %s: gap %.3e at n=%d", args.family, rows[-1]["gap"], max_n)
    app.emit(rows, columns=COLUMNS)
    return 0

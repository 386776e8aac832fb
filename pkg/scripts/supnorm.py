"""`mm supnorm POLY`: sup of |P| on the torus."""

import logging

logger = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "commands": {
        "supnorm": {
            "enabled": True,
        }
    }
}


def add_arguments(parser) -> None:
    parser.add_argument("polynomial", help='Laurent polynomial, e.g. "1+x-x^-1"')
    parser.add_argument("--complex", action="store_true", help="accept Gaussian coefficients (i)")


def on_load(app) -> None:
    app.commands.register_command(
        "supnorm",
        "supnorm",
        handle,
        help_text="Maximum of |P| on the unit torus and where it is attained.",
        add_arguments=add_arguments,
    )


async def handle(app, args) -> int:
    import math

    from core.genmm import sup_norm
    from core.laurent import parse
    from core.utils import run_blocking

    p = parse(args.polynomial, allow_complex=args.complex)
    start = app.start_timer()
    value, angles = await run_blocking(sup_norm, p)
    record = app.make_record(
        "supnorm",
        args.polynomial,
        value,
        method="grid+powell",
        wall_ms=app.elapsed_ms(start),
        log_value=math.log(value) if value > 0 else None,
        variables=list(p.active_variables()),
        argmax=list(angles),
    )
    app.emit([record])
    return 0

"""`mm gmm`: generalized Mahler measures of the built-in families or of given functions."""

import logging

logger = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "commands": {
        "gmm": {
            "enabled": True,
            "tolerance": 1e-6,
            "sigmas": 3.0,
        }
    }
}

FAMILY_CHOICES = ("1mx", "one_minus_x", "ratio", "golden")


def add_arguments(parser) -> None:
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--family", choices=FAMILY_CHOICES, help="built-in family P(x_i)")
    target.add_argument("--polys", nargs="+", metavar="POLY", help="explicit functions f_1 ... f_r")
    parser.add_argument("--n", type=int, default=1, help="number of functions in the family")
    parser.add_argument("--direct", action="store_true", help="also run the direct torus average")
    parser.add_argument("--auxiliary", action="store_true", help="also compute m(f1 + z f2) (r = 2)")
    parser.add_argument("--samples", type=int, help="sample budget for the direct average")


def on_load(app) -> None:
    app.commands.register_command(
        "gmm",
        "gmm",
        handle,
        help_text="Generalized Mahler measure: closed form next to numeric estimates.",
        add_arguments=add_arguments,
    )


def _family_rows(args, cfg):
    from core.command_manager import CommandError
    from core.genmm import (
        closed_form,
        family_polynomials,
        family_profile,
        gmm_direct,
        gmm_order_stat,
        gmm_via_auxiliary,
    )

    if args.n < 1:
        raise CommandError("--n must be at least 1")
    label = f"{args.family}:{args.n}"
    closed = closed_form(args.family, args.n)
    runs = [("order-stat", lambda: gmm_order_stat(family_profile(args.family), args.n, cfg))]
    if args.direct:
        runs.append(("direct", lambda: gmm_direct(family_polynomials(args.family, args.n), cfg)))
    if args.auxiliary:
        if args.n != 2:
            raise CommandError("--auxiliary needs --n 2")
        runs.append(("auxiliary", lambda: gmm_via_auxiliary(*family_polynomials(args.family, 2), cfg)))
    return label, closed, runs


def _explicit_rows(args, cfg):
    from core.command_manager import CommandError
    from core.genmm import gmm_direct, gmm_via_auxiliary
    from core.laurent import parse_many

    polys = parse_many(args.polys)
    label = " , ".join(args.polys)
    runs = [("direct", lambda: gmm_direct(polys, cfg))]
    if args.auxiliary:
        if len(polys) != 2:
            raise CommandError("--auxiliary needs exactly two functions")
        runs.append(("auxiliary", lambda: gmm_via_auxiliary(polys[0], polys[1], cfg)))
    return label, None, runs


async def handle(app, args) -> int:
    from core.utils import get_command_config, run_blocking

    settings = get_command_config(app, "gmm")
    tolerance = float(settings.get("tolerance", 1e-6))
    sigmas = float(settings.get("sigmas", 3.0))
    cfg = app.quadrature_config(total_samples=args.samples)

    if args.family:
        label, closed, runs = _family_rows(args, cfg)
    else:
        label, closed, runs = _explicit_rows(args, cfg)

    rows = []
    all_passed = True
    for name, compute in runs:
        start = app.start_timer()
        result = await run_blocking(compute)
        passed = None
        if closed is not None:
            allowed = tolerance if name == "order-stat" else max(tolerance, sigmas * result.error_estimate)
            passed = abs(result.value - closed) <= allowed
            all_passed = all_passed and passed
        rows.append(
            app.make_record(
                "gmm",
                label,
                result.value,
                error=result.error_estimate,
                closed_form=closed,
                passed=passed,
                samples=result.samples_used,
                method=result.method,
                wall_ms=app.elapsed_ms(start),
            )
        )
    app.emit(rows)
    return 0 if all_passed else 1

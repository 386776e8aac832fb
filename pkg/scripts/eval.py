"""`mm eval POLY`: Mahler measure of a Laurent polynomial."""

import logging

logger = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "commands": {
        "eval": {
            "enabled": True,
            "method": "auto",
        }
    }
}

METHODS = ("auto", "exact", "jensen", "direct")
QUADRATURES = ("auto", "tensor-gauss", "quasi-mc", "mc")


def add_arguments(parser) -> None:
    parser.add_argument("polynomial", help='Laurent polynomial, e.g. "1+x+y+z"')
    parser.add_argument("--method", choices=METHODS, help="measure evaluator")
    parser.add_argument("--var", help="variable to solve for in the Jensen reduction")
    parser.add_argument("--quadrature", choices=QUADRATURES, help="integration rule")
    parser.add_argument("--samples", type=int, help="sample budget for (quasi-)Monte Carlo")
    parser.add_argument("--tol", type=float, help="target error of the adaptive cubature")
    parser.add_argument("--complex", action="store_true", help="accept Gaussian coefficients (i)")


def on_load(app) -> None:
    app.commands.register_command(
        "eval",
        "eval",
        handle,
        help_text="Compute the Mahler measure of a polynomial.",
        add_arguments=add_arguments,
    )


async def handle(app, args) -> int:
    from core.laurent import parse
    from core.measure import mahler_measure
    from core.utils import get_command_config, run_blocking

    section = get_command_config(app, "eval")
    method = args.method or section.get("method", "auto")
    p = parse(args.polynomial, allow_complex=args.complex)
    cfg = app.quadrature_config(
        method=args.quadrature, total_samples=args.samples, tolerance=args.tol
    )
    start = app.start_timer()
    result = await run_blocking(mahler_measure, p, cfg, method, args.var)
    record = app.make_record(
        "eval",
        args.polynomial,
        result.value,
        error=result.error_estimate,
        samples=result.samples_used,
        method=result.method,
        wall_ms=app.elapsed_ms(start),
        metadata=result.metadata,
    )
    app.emit([record])
    return 0

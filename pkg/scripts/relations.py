"""`mm relations`: residuals of the built-in polylogarithm functional equations."""

import logging

logger = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "commands": {
        "relations": {
            "enabled": True,
            "tolerance": 1e-10,
            "samples": 100,
        }
    }
}


def add_arguments(parser) -> None:
    parser.add_argument("--name", action="append", dest="names", metavar="NAME",
                        help="only this relation (repeatable)")
    parser.add_argument("--samples", type=int, help="random points per relation with free variables")


def on_load(app) -> None:
    app.commands.register_command(
        "relations",
        "relations",
        handle,
        aliases=["rel"],
        help_text="Evaluate sum c_i L_n(g_i) for every built-in relation.",
        add_arguments=add_arguments,
    )


def _residual(rel, samples: int, seed: int):
    from core.identities import relation_residual, sample_points

    points = sample_points(rel, count=samples, seed=seed)
    return relation_residual(rel, points), len(points)


async def handle(app, args) -> int:
    from core.command_manager import CommandError
    from core.identities import builtin_relations
    from core.utils import get_command_config, run_blocking

    settings = get_command_config(app, "relations")
    tolerance = float(settings.get("tolerance", 1e-10))
    samples = args.samples or int(settings.get("samples", 100))
    if samples < 1:
        raise CommandError("--samples must be at least 1")

    relations = builtin_relations()
    names = args.names or list(relations)
    unknown = [name for name in names if name not in relations]
    if unknown:
        raise CommandError(f"Unknown relation(s): {', '.join(unknown)}")

    rows = []
    failed = []
    for name in names:
        rel = relations[name]
        start = app.start_timer()
        residual, used = await run_blocking(_residual, rel, samples, app.seed)
        passed = residual < tolerance
        if not passed:
            failed.append(name)
        rows.append(
            app.make_record(
                "relations",
                name,
                residual,
                closed_form=0.0,
                passed=passed,
                samples=used,
                method="residual",
                wall_ms=app.elapsed_ms(start),
                order=rel.order,
                variables=list(rel.variables),
            )
        )
    app.emit(rows)
    if failed:
        logger.warning("Relations above %.0e: %s", tolerance, ", ".join(failed))
        return 1
    return 0

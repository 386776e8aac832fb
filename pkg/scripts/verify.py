"""`mm verify`: check registry identities against independent numerics."""

import logging

logger = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "commands": {
        "verify": {
            "enabled": True,
        }
    }
}

METHODS = ("jensen", "direct", "order_stat", "auxiliary", "residual", "numeric", "closed_only")


def add_arguments(parser) -> None:
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--all", action="store_true", help="verify every registry record")
    target.add_argument("--id", action="append", dest="ids", metavar="NAME", help="record id (repeatable)")
    parser.add_argument("--tol", type=float, help="override the record tolerance")
    parser.add_argument("--method", choices=METHODS, help="numeric method (default per record)")
    parser.add_argument("--export", metavar="PATH", help="also write the registry as JSON")
    parser.add_argument("--report", metavar="PATH", help="also write the verification reports as JSON")


def on_load(app) -> None:
    app.commands.register_command(
        "verify",
        "verify",
        handle,
        help_text="Verify closed-form identities; exit 1 when any check fails.",
        add_arguments=add_arguments,
    )


async def handle(app, args) -> int:
    from pathlib import Path

    from core.command_manager import CommandError
    from core.identities import (
        closed_form_text,
        export_registry,
        export_reports,
        lookup,
        verify,
        verify_all,
    )
    from core.utils import run_blocking

    if args.export:
        export_registry(Path(args.export))

    ids = args.ids
    if ids:
        records = {}
        for identity_id in ids:
            try:
                records[identity_id] = lookup(identity_id)
            except KeyError:
                raise CommandError(f"Unknown identity '{identity_id}'") from None
    else:
        records = None

    if args.method:
        if records is None:
            raise CommandError("--method applies to --id runs only")
        for record in records.values():
            if args.method not in record.methods:
                raise CommandError(
                    f"Method '{args.method}' does not apply to {record.kind} record '{record.id}'"
                )

    cfg = app.quadrature_config()
    start = app.start_timer()
    if args.method:
        reports = [await run_blocking(verify, i, args.method, cfg, args.tol) for i in ids]
    else:
        reports = await verify_all(cfg, app.threads, ids, args.tol)
    wall_ms = app.elapsed_ms(start)
    if args.report:
        export_reports(Path(args.report), reports)

    rows = []
    for report in reports:
        record = records[report.id] if records else lookup(report.id)
        rows.append(
            app.make_record(
                "verify",
                report.id,
                report.numeric_value,
                error=report.abs_diff,
                closed_form=report.closed_value,
                passed=report.passed,
                samples=report.samples,
                method=report.method,
                wall_ms=wall_ms,
                kind=record.kind,
                tolerance=report.tolerance,
                closed_form_text=closed_form_text(record.closed_form),
                source=record.source,
            )
        )
    app.emit(rows)
    failed = [r.id for r in reports if not r.passed]
    if failed:
        logger.warning("Failed identities: %s", ", ".join(failed))
        return 1
    return 0

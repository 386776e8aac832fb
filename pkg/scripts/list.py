"""`mm list`: registry ids."""

CONFIG_DEFAULTS = {
    "commands": {
        "list": {
            "enabled": True,
        }
    }
}

COLUMNS = ("id", "kind", "methods", "tolerance", "closed_form", "source")


def add_arguments(parser) -> None:
    parser.add_argument("--kind", choices=("mahler", "gmm", "polylog_relation", "series"),
                        help="only records of this kind")


def on_load(app) -> None:
    app.commands.register_command(
        "list",
        "list",
        handle,
        aliases=["ls"],
        help_text="List the identity registry.",
        add_arguments=add_arguments,
    )


async def handle(app, args) -> int:
    from core.identities import closed_form_text, registry

    rows = [
        {
            "id": record.id,
            "kind": record.kind,
            "methods": list(record.methods),
            "tolerance": record.tolerance,
            "closed_form": closed_form_text(record.closed_form),
            "source": record.source,
        }
        for record in registry()
        if args.kind is None or record.kind == args.kind
    ]
    app.emit(rows, columns=COLUMNS)
    return 0

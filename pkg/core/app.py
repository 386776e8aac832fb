"""Application object shared by every command: config, commands and output."""

import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, TextIO

from core.command_manager import CommandManager
from core.measure import QuadratureConfig
from core.utils import atomic_write_json, file_lock

RECORD_FIELDS = (
    "command",
    "input",
    "value",
    "error",
    "closed_form",
    "pass",
    "seed",
    "samples",
    "wall_ms",
    "method",
)


def _clean(value: Any) -> Any:
    """JSON-safe copy: non-finite floats become None."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


class MahlerApp:
    def __init__(
        self,
        config: Dict[str, Any],
        command_manager: CommandManager,
        *,
        stdout: Optional[TextIO] = None,
    ) -> None:
        self.config = config
        self.commands = command_manager
        self.stdout = stdout or sys.stdout
        self.timing = False
        self.logger = logging.getLogger("mm.app")

    @property
    def seed(self) -> int:
        return int(self.config.get("seed", 0))

    @property
    def threads(self) -> int:
        return int(self.config.get("threads", 1))

    @property
    def output_format(self) -> str:
        return str(self.config.get("output_format", "json"))

    @property
    def output_path(self) -> Optional[Path]:
        output = self.config.get("output")
        return Path(output) if output else None

    def quadrature_config(self, **overrides: Any) -> QuadratureConfig:
        base = QuadratureConfig.from_config(self.config.get("quadrature"))
        return base.with_changes(seed=self.seed, threads=self.threads, **overrides)

    def start_timer(self) -> float:
        return time.perf_counter()

    def elapsed_ms(self, start: float) -> int:
        if not self.timing:
            return 0
        return int(round((time.perf_counter() - start) * 1000))

    def make_record(
        self,
        command: str,
        input: Any,
        value: Optional[float],
        *,
        error: Optional[float] = None,
        closed_form: Optional[float] = None,
        passed: Optional[bool] = None,
        samples: int = 1,
        method: Optional[str] = None,
        wall_ms: int = 0,
        **extra: Any,
    ) -> Dict[str, Any]:
        record = {
            "command": command,
            "input": input,
            "value": value,
            "error": error,
            "closed_form": closed_form,
            "pass": passed,
            "seed": self.seed,
            "samples": samples,
            "wall_ms": wall_ms,
            "method": method,
        }
        record.update(extra)
        return record

    def render(self, records: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> str:
        records = [_clean(r) for r in records]
        if self.output_format == "json":
            return json.dumps(records, indent=2) + "\n"
        fields = list(columns or RECORD_FIELDS)
        for record in records:
            for key in record:
                if key not in fields:
                    fields.append(key)
        if self.output_format == "csv":
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(fields)
            for record in records:
                writer.writerow([_cell(record.get(key)) for key in fields])
            return buffer.getvalue()
        width = max(len(key) for key in fields)
        blocks = []
        for record in records:
            lines = [f"{key.ljust(width)} = {_cell(record.get(key))}" for key in fields if key in record]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def emit(self, records: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> None:
        path = self.output_path
        if path is None:
            self.stdout.write(self.render(records, columns))
            self.stdout.flush()
            return
        with file_lock(path.with_suffix(path.suffix + ".lock")):
            if self.output_format == "json":
                atomic_write_json(path, [_clean(r) for r in records], indent=2)
            else:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(self.render(records, columns), encoding="utf-8")
        self.logger.info("Wrote %d record(s) to %s", len(records), path)

    async def run(self, command: str, args) -> int:
        return await self.commands.dispatch(self, command, args)

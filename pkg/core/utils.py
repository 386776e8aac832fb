import asyncio
import contextlib
import functools
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict

from filelock import FileLock

OUTPUT_FORMATS = ("json", "csv", "plain")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def setup_logging(level: int = logging.INFO) -> None:
    """Configure the root logger with timestamped output on stderr."""
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def validate_required_keys(config: Dict[str, object], required: Dict[str, type]) -> None:
    """Ensure required keys exist and match expected types."""
    missing = [key for key in required if key not in config]
    if missing:
        raise KeyError(f"Missing required config keys: {', '.join(missing)}")

    for key, expected_type in required.items():
        if not isinstance(config[key], expected_type) or (
            expected_type is int and isinstance(config[key], bool)
        ):
            raise TypeError(f"Config key '{key}' must be of type {expected_type.__name__}")


def validate_config(config: Dict[str, Any]) -> None:
    """
    Validate the configuration schema.
    Raises KeyError, TypeError or ValueError if the configuration is invalid.
    """
    required_keys = {
        "seed": int,
        "threads": int,
        "output_format": str,
        "log_level": str,
    }
    validate_required_keys(config, required_keys)

    if config["seed"] < 0:
        raise ValueError("Config key 'seed' must be nonnegative")
    if config["threads"] < 1:
        raise ValueError("Config key 'threads' must be at least 1")
    if config["output_format"] not in OUTPUT_FORMATS:
        raise ValueError(
            f"Config key 'output_format' must be one of {', '.join(OUTPUT_FORMATS)}"
        )
    if config["log_level"].upper() not in LOG_LEVELS:
        raise ValueError(f"Config key 'log_level' must be one of {', '.join(LOG_LEVELS)}")

    for key in ("quadrature", "commands"):
        if key in config and not isinstance(config[key], dict):
            raise TypeError(f"Config key '{key}' must be of type dict")

    if "output" in config and config["output"] is not None and not isinstance(config["output"], str):
        raise TypeError("Config key 'output' must be of type str")


@contextlib.contextmanager
def file_lock(lock_path: Path):
    """Cross-platform file locking using filelock."""
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(lock_path))
    with lock:
        yield


def get_command_config(app, command_name: str) -> dict:
    """Return the config dict for a command, or empty dict if missing."""
    config = getattr(app, "config", {})
    if not isinstance(config, dict):
        return {}
    commands_section = config.get("commands")
    if not isinstance(commands_section, dict):
        return {}
    candidate = commands_section.get(command_name)
    if isinstance(candidate, dict):
        return candidate
    return {}


async def run_blocking(func, *args, **kwargs):
    """Run a blocking function in the default executor."""
    loop = asyncio.get_running_loop()
    call = functools.partial(func, *args, **kwargs)
    return await loop.run_in_executor(None, call)


def atomic_write_json(path: Path, data: Any, **dump_kwargs: Any) -> None:
    """Write JSON to ``path`` atomically (temp file + os.replace).

    A crash mid-write leaves the original file intact. Extra kwargs are
    forwarded to ``json.dump``.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with tmp_path.open("w", encoding="utf-8") as handle:
        json.dump(data, handle, **dump_kwargs)
        handle.write("\n")
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp_path, path)

import argparse
import asyncio
import copy
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml

from core.app import MahlerApp
from core.command_manager import EXIT_USAGE, CommandManager
from core.utils import LOG_LEVELS, OUTPUT_FORMATS, setup_logging, validate_config

DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": 0,
    "threads": 1,
    "output_format": "json",
    "log_level": "WARNING",
    "output": None,
    "quadrature": {},
    "commands": {},
}

CONFIG_ENV_MAP = {
    "MM_SEED": ("seed", int),
    "MM_THREADS": ("threads", int),
    "MM_OUTPUT_FORMAT": ("output_format", lambda v: v.strip().lower()),
    "MM_LOG_LEVEL": ("log_level", lambda v: v.strip().upper()),
}

CLI_OVERRIDES = {
    "seed": "seed",
    "threads": "threads",
    "format": "output_format",
    "log_level": "log_level",
    "output": "output",
}


def load_config(config_path: Path, required: bool = False) -> Dict[str, Any]:
    """Defaults, then the YAML file (if present), then the environment."""
    data = copy.deepcopy(DEFAULT_CONFIG)
    if config_path.exists():
        with config_path.open("r", encoding="utf-8") as handle:
            loaded = yaml.safe_load(handle) or {}
        if not isinstance(loaded, dict):
            raise ValueError("Configuration root must be a mapping")
        data.update(loaded)
    elif required:
        raise FileNotFoundError(f"Config file not found: {config_path}")

    apply_env_overrides(data)
    return data


def apply_env_overrides(config: Dict[str, Any]) -> None:
    for env_key, (config_key, caster) in CONFIG_ENV_MAP.items():
        value = os.environ.get(env_key)
        if value is None:
            continue
        try:
            config[config_key] = caster(value)
        except Exception as exc:
            raise ValueError(f"Invalid value for {env_key}: {value}") from exc


def apply_cli_overrides(config: Dict[str, Any], args: argparse.Namespace) -> None:
    for attr, config_key in CLI_OVERRIDES.items():
        value = getattr(args, attr, None)
        if value is not None:
            config[config_key] = value


def _global_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML config file (default: config.yaml)")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS)


def build_parser(manager: CommandManager) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mm",
        description="Mahler measures, generalized measures and regulator checks.",
    )
    _global_arguments(parser)
    parser.add_argument("--seed", type=int, help="seed for randomized quadrature (env MM_SEED)")
    parser.add_argument("--threads", type=int, help="worker threads (default 1)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, help="output format")
    parser.add_argument("--output", type=str, help="write records to this file instead of stdout")
    parser.add_argument("--timing", action="store_true", help="report wall-clock time in wall_ms")
    manager.add_subparsers(parser)
    return parser


async def run(argv: Optional[Sequence[str]] = None, *, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    _global_arguments(pre)
    known, _ = pre.parse_known_args(argv)

    config_path_env = os.environ.get("MM_CONFIG_PATH")
    if known.config is not None:
        config_path, required = known.config, True
    elif config_path_env:
        config_path, required = Path(config_path_env), True
    else:
        config_path, required = Path("config.yaml"), False
    config = load_config(config_path, required)
    if known.log_level:
        config["log_level"] = known.log_level
    level_name = str(config.get("log_level", "WARNING")).upper()
    setup_logging(getattr(logging, level_name, logging.WARNING))

    manager = CommandManager(Path(__file__).parent / "scripts", logger=logging.getLogger("mm.commands"))
    app = MahlerApp(config, manager, stdout=stdout)
    manager.load_all(app)

    parser = build_parser(manager)
    args = parser.parse_args(argv)
    apply_cli_overrides(config, args)
    validate_config(config)
    logging.getLogger().setLevel(getattr(logging, config["log_level"].upper()))
    app.timing = bool(args.timing)
    return await app.run(args.command, args)


def main(argv: Optional[List[str]] = None) -> None:
    try:
        code = asyncio.run(run(argv))
    except KeyboardInterrupt:
        logging.getLogger("mm").info("Interrupted, shutting down")
        code = 130
    except (FileNotFoundError, KeyError, TypeError, ValueError) as exc:
        logging.getLogger("mm").error("Configuration error: %s", exc)
        code = EXIT_USAGE
    except Exception as exc:
        logging.getLogger("mm").exception("Fatal error: %s", exc)
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    main()

import argparse
import importlib
import importlib.util
import inspect
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from types import ModuleType
from typing import Callable, Dict, List, Optional, Set, Tuple

from core.laurent import ParseError
from core.measure import IntegrationError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class CommandError(Exception):
    """A command failed with a specific exit code."""

    def __init__(self, message: str, exit_code: int = EXIT_USAGE) -> None:
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class CommandSpec:
    module: str
    name: str
    aliases: Set[str]
    help_text: str
    handler: Callable
    add_arguments: Optional[Callable[[argparse.ArgumentParser], None]] = None


class CommandManager:
    """Load command modules from a directory and dispatch parsed invocations."""

    def __init__(self, command_dir: Path, logger: Optional[logging.Logger] = None) -> None:
        self.command_dir = command_dir
        self.logger = logger or logging.getLogger("CommandManager")
        self._modules: Dict[str, ModuleType] = {}
        self._disabled_modules: Set[str] = set()
        self._commands: Dict[str, CommandSpec] = {}
        self._module_commands: Dict[str, Set[str]] = {}

    def list_modules(self) -> List[str]:
        return sorted(self._modules.keys())

    def list_module_status(self) -> Tuple[List[str], List[str]]:
        return sorted(self._modules.keys()), sorted(self._disabled_modules)

    def module_name(self, name: str) -> str:
        return f"scripts.{name}"

    def _load_module(self, name: str) -> ModuleType:
        path = self.command_dir / f"{name}.py"
        if not path.exists():
            raise FileNotFoundError(f"Command module '{name}' does not exist at {path}")

        module_name = self.module_name(name)
        importlib.invalidate_caches()
        sys.modules.pop(module_name, None)
        spec = importlib.util.spec_from_file_location(module_name, path)
        if spec is None or spec.loader is None:
            raise ImportError(f"Could not load spec for command module '{name}'")

        module = importlib.util.module_from_spec(spec)
        sys.modules[module_name] = module
        try:
            spec.loader.exec_module(module)  # type: ignore[attr-defined]
        except Exception:
            sys.modules.pop(module_name, None)
            raise
        return module

    def load(self, name: str, app) -> None:
        if name in self._modules:
            raise RuntimeError(f"Command module '{name}' is already loaded")

        module = self._load_module(name)
        try:
            self._apply_config_defaults(app, module)
            on_load = getattr(module, "on_load", None)
            if callable(on_load):
                on_load(app)
        except Exception:
            sys.modules.pop(getattr(module, "__name__", self.module_name(name)), None)
            self._unregister_commands_for_module(name)
            raise
        self._modules[name] = module
        self._disabled_modules.discard(name)
        self.logger.debug("Loaded command module '%s'", name)

    def load_all(self, app) -> None:
        if not self.command_dir.exists():
            self.logger.warning("Command directory %s does not exist", self.command_dir)
            return

        available = sorted(
            path.stem for path in self.command_dir.glob("*.py") if not path.name.startswith("_")
        )
        self._disabled_modules = self._disabled_in_config(app) & set(available)
        for name in available:
            if name in self._disabled_modules:
                self.logger.info("Skipping disabled command '%s'", name)
                continue
            try:
                self.load(name, app)
            except Exception:
                self.logger.exception("Failed to load command module '%s'", name)

    def register_command(
        self,
        module_name: str,
        command: str,
        handler: Callable,
        *,
        aliases: Optional[List[str]] = None,
        help_text: str = "",
        add_arguments: Optional[Callable[[argparse.ArgumentParser], None]] = None,
    ) -> None:
        if not command:
            raise ValueError("Command name must be non-empty")
        names = {command.lower()}
        if aliases:
            names.update(alias.lower() for alias in aliases if alias)

        for name in names:
            if name in self._commands:
                raise ValueError(f"Command '{name}' already registered by {self._commands[name].module}")

        spec = CommandSpec(
            module=module_name,
            name=command.lower(),
            aliases=names,
            help_text=help_text,
            handler=handler,
            add_arguments=add_arguments,
        )
        for name in names:
            self._commands[name] = spec
        self._module_commands.setdefault(module_name, set()).update(names)

    def get(self, command: str) -> Optional[CommandSpec]:
        return self._commands.get(command.lower())

    def list_commands(self) -> List[CommandSpec]:
        seen = set()
        specs: List[CommandSpec] = []
        for spec in self._commands.values():
            if spec.name in seen:
                continue
            seen.add(spec.name)
            specs.append(spec)
        return sorted(specs, key=lambda s: s.name)

    def add_subparsers(self, parser: argparse.ArgumentParser) -> None:
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        for spec in self.list_commands():
            sub = subparsers.add_parser(
                spec.name,
                aliases=sorted(spec.aliases - {spec.name}),
                help=spec.help_text,
                description=spec.help_text,
            )
            if spec.add_arguments is not None:
                spec.add_arguments(sub)

    async def dispatch(self, app, command: str, args: argparse.Namespace) -> int:
        """Run a command and map its outcome to an exit code."""
        spec = self.get(command)
        if spec is None:
            self.logger.error("Unknown command '%s'", command)
            return EXIT_USAGE
        try:
            result = spec.handler(app, args)
            if inspect.iscoroutine(result):
                result = await result
        except CommandError as exc:
            self.logger.error("%s: %s", spec.name, exc)
            return exc.exit_code
        except ParseError as exc:
            self.logger.error("%s: %s\n%s", spec.name, exc, exc.caret())
            return EXIT_USAGE
        except KeyError as exc:
            self.logger.error("%s: %s", spec.name, exc.args[0] if exc.args else exc)
            return EXIT_USAGE
        except (IntegrationError, ArithmeticError, ValueError) as exc:
            self.logger.error("%s failed: %s", spec.name, exc)
            return EXIT_NUMERIC
        return EXIT_OK if result is None else int(result)

    def _disabled_in_config(self, app) -> Set[str]:
        config = getattr(app, "config", None)
        if not isinstance(config, dict):
            return set()
        section = config.get("commands")
        if not isinstance(section, dict):
            return set()
        return {
            str(name)
            for name, entry in section.items()
            if isinstance(entry, dict) and entry.get("enabled") is False
        }

    def _apply_config_defaults(self, app, module: ModuleType) -> None:
        defaults = getattr(module, "CONFIG_DEFAULTS", None)
        if not isinstance(defaults, dict) or not defaults:
            return
        app_config = getattr(app, "config", None)
        if isinstance(app_config, dict):
            self._merge_defaults(app_config, defaults)

    def _merge_defaults(self, target: Dict, defaults: Dict) -> bool:
        changed = False
        for key, value in defaults.items():
            if isinstance(value, dict):
                existing = target.get(key)
                if not isinstance(existing, dict):
                    if key in target:
                        # Existing non-dict; skip to avoid corruption.
                        continue
                    target[key] = {}
                    existing = target[key]
                    changed = True
                if self._merge_defaults(existing, value):
                    changed = True
            elif isinstance(value, list):
                existing = target.setdefault(key, [])
                if not isinstance(existing, list):
                    continue
                for item in value:
                    if item not in existing:
                        existing.append(item)
                        changed = True
            else:
                if key not in target:
                    target[key] = value
                    changed = True
        return changed

    def _unregister_commands_for_module(self, module_name: str) -> None:
        names = self._module_commands.pop(module_name, set())
        for name in names:
            self._commands.pop(name, None)

import argparse
import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock

# Adjust path to import core modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.command_manager import EXIT_NUMERIC, EXIT_USAGE, CommandManager

DUMMY = """
CONFIG_DEFAULTS = {{"commands": {{"{name}": {{"enabled": True, "greeting": "hi"}}}}}}


def on_load(app):
    app.commands.register_command("{name}", "{name}", handle, aliases={aliases}, help_text="dummy")


async def handle(app, args):
{body}
"""


class TestCommandManager(unittest.IsolatedAsyncioTestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())
        self.command_dir = self.test_dir / "scripts"
        self.command_dir.mkdir()
        self.manager = CommandManager(self.command_dir)
        self.app = MagicMock()
        self.app.config = {}
        self.app.commands = self.manager

    def tearDown(self):
        shutil.rmtree(self.test_dir)
        for name in list(sys.modules):
            if name.startswith("scripts.c"):
                sys.modules.pop(name, None)

    def create_dummy_command(self, name, body="    return 0", aliases=None):
        path = self.command_dir / f"{name}.py"
        path.write_text(DUMMY.format(name=name, body=body, aliases=aliases or []), encoding="utf-8")
        return name

    def test_load_registers_command_and_defaults(self):
        self.create_dummy_command("c1", aliases=["one"])
        self.manager.load("c1", self.app)
        self.assertIn("c1", self.manager.list_modules())
        self.assertIs(self.manager.get("one"), self.manager.get("c1"))
        self.assertEqual(self.app.config["commands"]["c1"]["greeting"], "hi")
        with self.assertRaisesRegex(RuntimeError, "already loaded"):
            self.manager.load("c1", self.app)

    def test_existing_config_wins_over_defaults(self):
        self.app.config = {"commands": {"c1": {"greeting": "hello"}}}
        self.create_dummy_command("c1")
        self.manager.load("c1", self.app)
        self.assertEqual(self.app.config["commands"]["c1"], {"greeting": "hello", "enabled": True})

    def test_load_all_skips_private_and_disabled(self):
        self.create_dummy_command("c1")
        self.create_dummy_command("c2")
        self.create_dummy_command("_c3")
        self.app.config = {"commands": {"c2": {"enabled": False}}}
        self.manager.load_all(self.app)
        loaded, disabled = self.manager.list_module_status()
        self.assertEqual(loaded, ["c1"])
        self.assertEqual(disabled, ["c2"])

    def test_broken_module_does_not_stop_others(self):
        (self.command_dir / "c0.py").write_text("raise ImportError('boom')\n", encoding="utf-8")
        self.create_dummy_command("c1")
        self.manager.load_all(self.app)
        self.assertEqual(self.manager.list_modules(), ["c1"])

    def test_duplicate_names_rejected(self):
        self.create_dummy_command("c1", aliases=["shared"])
        self.create_dummy_command("c2", aliases=["shared"])
        self.manager.load("c1", self.app)
        with self.assertRaisesRegex(ValueError, "already registered"):
            self.manager.load("c2", self.app)
        self.assertNotIn("c2", self.manager.list_modules())
        self.assertIsNone(self.manager.get("c2"))

    def test_subparsers(self):
        self.create_dummy_command("c1", aliases=["one"])
        self.manager.load("c1", self.app)
        parser = argparse.ArgumentParser()
        self.manager.add_subparsers(parser)
        self.assertEqual(parser.parse_args(["one"]).command, "one")

    async def test_dispatch_exit_codes(self):
        cases = {
            "c1": ("    return 1", 1),
            "c2": ("    raise KeyError('missing')", EXIT_USAGE),
            "c3": ("    raise ValueError('bad number')", EXIT_NUMERIC),
            "c4": ("    from core.laurent import parse\n    parse('1+(')", EXIT_USAGE),
            "c5": ("    from core.command_manager import CommandError\n    raise CommandError('x', 7)", 7),
            "c6": ("    return None", 0),
            "c7": ("    raise ZeroDivisionError()", EXIT_NUMERIC),
        }
        for name, (body, _) in cases.items():
            self.create_dummy_command(name, body)
            self.manager.load(name, self.app)
        for name, (_, expected) in cases.items():
            code = await self.manager.dispatch(self.app, name, argparse.Namespace())
            self.assertEqual(code, expected, name)
        self.assertEqual(await self.manager.dispatch(self.app, "missing", argparse.Namespace()), EXIT_USAGE)


if __name__ == "__main__":
    unittest.main()

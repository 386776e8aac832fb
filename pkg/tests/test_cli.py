import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

sys.path.insert(0, str(Path(__file__).parent.parent))

import mm
from core.app import RECORD_FIELDS
from mm import apply_env_overrides, load_config, run


class TestCli(unittest.IsolatedAsyncioTestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())
        self.config_path = self.test_dir / "config.yaml"
        self.config_path.write_text("seed: 0\nthreads: 1\nlog_level: ERROR\n", encoding="utf-8")
        self.env = patch.dict(os.environ, {}, clear=False)
        self.env.start()
        for key in list(mm.CONFIG_ENV_MAP) + ["MM_CONFIG_PATH"]:
            os.environ.pop(key, None)

    def tearDown(self):
        self.env.stop()
        shutil.rmtree(self.test_dir)

    async def invoke(self, *argv):
        out = io.StringIO()
        code = await run(["--config", str(self.config_path), *argv], stdout=out)
        return code, out.getvalue()

    async def test_eval_linear(self):
        code, text = await self.invoke("eval", "x-2")
        self.assertEqual(code, 0)
        records = json.loads(text)
        self.assertEqual(len(records), 1)
        record = records[0]
        self.assertEqual(record["command"], "eval")
        self.assertEqual(record["input"], "x-2")
        self.assertAlmostEqual(record["value"], 0.693147, places=6)
        self.assertEqual(record["method"], "exact")
        self.assertEqual(record["wall_ms"], 0)
        self.assertEqual(list(record)[:10], list(RECORD_FIELDS))

    async def test_parse_error_exit_code(self):
        code, text = await self.invoke("eval", "1+x+(")
        self.assertEqual(code, 2)
        self.assertEqual(text, "")

    async def test_seeded_output_is_byte_identical(self):
        argv = ("--seed", "5", "eval", "1+x+y", "--method", "direct", "--quadrature", "mc", "--samples", "8192")
        first = await self.invoke(*argv)
        second = await self.invoke(*argv)
        self.assertEqual(first, second)
        self.assertEqual(json.loads(first[1])[0]["seed"], 5)

    async def test_csv_and_plain(self):
        code, text = await self.invoke("--format", "csv", "eval", "x-2")
        self.assertEqual(code, 0)
        rows = list(csv.reader(io.StringIO(text)))
        self.assertEqual(rows[0][:3], ["command", "input", "value"])
        self.assertEqual(rows[1][0], "eval")
        self.assertAlmostEqual(float(rows[1][2]), math.log(2), places=12)

        code, text = await self.invoke("--format", "plain", "eval", "x-2")
        self.assertEqual(code, 0)
        self.assertIn("command", text.splitlines()[0])
        self.assertTrue(text.splitlines()[0].endswith("= eval"))

    async def test_output_file(self):
        target = self.test_dir / "out" / "records.json"
        code, text = await self.invoke("--output", str(target), "eval", "x-2")
        self.assertEqual(code, 0)
        self.assertEqual(text, "")
        self.assertEqual(json.loads(target.read_text(encoding="utf-8"))[0]["command"], "eval")

    async def test_verify(self):
        code, text = await self.invoke("verify", "--id", "series_tail", "--id", "rel_reflection")
        self.assertEqual(code, 0)
        records = json.loads(text)
        self.assertEqual([r["input"] for r in records], ["series_tail", "rel_reflection"])
        self.assertTrue(all(r["pass"] for r in records))

        code, _ = await self.invoke("verify", "--id", "nope")
        self.assertEqual(code, 2)
        code, _ = await self.invoke("verify", "--id", "condon", "--method", "order_stat")
        self.assertEqual(code, 2)

    async def test_verify_report_file(self):
        target = self.test_dir / "reports.json"
        code, _ = await self.invoke("verify", "--id", "gmm_golden_1", "--report", str(target))
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(target.read_text(encoding="utf-8"))[0]["id"], "gmm_golden_1")

    async def test_gmm_family(self):
        code, text = await self.invoke("gmm", "--family", "1mx", "--n", "1")
        self.assertEqual(code, 0)
        record = json.loads(text)[0]
        self.assertTrue(record["pass"])
        self.assertEqual(record["closed_form"], 0.0)
        self.assertEqual(record["method"], "order-stat")

        code, _ = await self.invoke("gmm", "--family", "golden", "--n", "3", "--auxiliary")
        self.assertEqual(code, 2)

    async def test_gmm_explicit_functions(self):
        code, text = await self.invoke("gmm", "--polys", "1-x", "1-y", "--samples", "20000")
        self.assertEqual(code, 0)
        record = json.loads(text)[0]
        self.assertEqual(record["input"], "1-x , 1-y")
        self.assertEqual(record["method"], "direct")
        self.assertIsNone(record["closed_form"])
        self.assertLess(abs(record["value"] - 7 * 1.2020569031595942 / (2 * math.pi ** 2)), 0.05)

        code, text = await self.invoke("gmm", "--polys", "1-x", "1+(")
        self.assertEqual(code, 2)
        self.assertEqual(text, "")

    async def test_list_and_limit(self):
        code, text = await self.invoke("ls", "--kind", "gmm")
        self.assertEqual(code, 0)
        rows = json.loads(text)
        self.assertTrue(rows)
        self.assertTrue(all(r["kind"] == "gmm" for r in rows))

        code, text = await self.invoke("limit", "--family", "ratio", "--max-n", "3")
        self.assertEqual(code, 0)
        rows = json.loads(text)
        self.assertEqual([r["n"] for r in rows], [1, 2, 3])
        self.assertIsNone(rows[0]["log_sup"])

    async def test_relations_and_supnorm(self):
        code, text = await self.invoke("rel", "--name", "rel_reflection", "--samples", "20")
        self.assertEqual(code, 0)
        record = json.loads(text)[0]
        self.assertEqual(record["samples"], 20)
        self.assertTrue(record["pass"])

        code, text = await self.invoke("supnorm", "1-x")
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(text)[0]["value"], 2.0, places=10)

    async def test_usage_errors(self):
        with self.assertRaises(SystemExit) as ctx:
            await self.invoke("frobnicate")
        self.assertEqual(ctx.exception.code, 2)
        with self.assertRaisesRegex(ValueError, "'threads' must be at least 1"):
            await self.invoke("--threads", "0", "eval", "x-2")


class TestConfigLoading(unittest.TestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_defaults_without_file(self):
        with patch.dict(os.environ, {}, clear=True):
            config = load_config(self.test_dir / "missing.yaml")
        self.assertEqual(config["seed"], 0)
        self.assertEqual(config["output_format"], "json")
        with self.assertRaises(FileNotFoundError):
            load_config(self.test_dir / "missing.yaml", required=True)

    def test_environment_overrides_file(self):
        path = self.test_dir / "config.yaml"
        path.write_text("seed: 3\noutput_format: csv\n", encoding="utf-8")
        with patch.dict(os.environ, {"MM_SEED": "9", "MM_OUTPUT_FORMAT": " Plain "}, clear=True):
            config = load_config(path)
        self.assertEqual(config["seed"], 9)
        self.assertEqual(config["output_format"], "plain")

    def test_invalid_environment_value(self):
        config = {}
        with patch.dict(os.environ, {"MM_SEED": "abc"}, clear=True):
            with self.assertRaisesRegex(ValueError, "Invalid value for MM_SEED"):
                apply_env_overrides(config)

    def test_root_must_be_mapping(self):
        path = self.test_dir / "config.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with self.assertRaisesRegex(ValueError, "mapping"):
            load_config(path)


if __name__ == "__main__":
    unittest.main()

"""End-to-end checks of the armpose executable.

usage: test_cli.py <armpose binary> <schema dir> <golden dir>
"""

import json
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

BIN = SCHEMAS = GOLDEN = None


def run(*args, check=True):
    proc = subprocess.run([str(BIN), *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def validated(name, text):
    doc = json.loads(text)
    jsonschema.validate(doc, schema(name))
    return doc


class Cli(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls._tmp = tempfile.TemporaryDirectory()
        cls.tmp = Path(cls._tmp.name)
        cls.ds = cls.tmp / "ds"
        cls.synth_out = run("synth", "--out", cls.ds, "--seed", 11, "--n", 6).stdout

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()

    def test_help_and_usage_errors(self):
        self.assertEqual(run("--help").returncode, 0)
        for sub in ["synth", "solve", "refine", "eval", "reach", "demo"]:
            self.assertEqual(run(sub, "--help").returncode, 0, sub)
        bad = run("demo", "--no-such-flag", check=False)
        self.assertEqual(bad.returncode, 2)
        self.assertIn("--help", bad.stdout + bad.stderr)
        self.assertEqual(run("no-such-command", check=False).returncode, 2)
        self.assertEqual(run("synth", "--out", self.tmp / "x", check=False).returncode, 2)

    def test_domain_error_is_structured(self):
        empty = self.tmp / "empty"
        empty.mkdir(exist_ok=True)
        proc = run("eval", "--pred", empty, "--gt", empty, check=False)
        self.assertEqual(proc.returncode, 1)
        err = validated("error", proc.stderr.strip().splitlines()[-1])
        self.assertEqual(err["error"], "EmptyEvalError")

        bad_model = self.tmp / "bad_model.json"
        bad_model.write_text("{ not json")
        proc = run("demo", "--n", 2, "--model", bad_model, check=False)
        self.assertEqual(proc.returncode, 1)
        self.assertEqual(validated("error", proc.stderr.strip().splitlines()[-1])["error"],
                         "ParseError")

    def test_synth(self):
        doc = validated("synth", self.synth_out)
        self.assertEqual(doc["n"], 6)
        self.assertEqual(len(list((self.ds / "annotations").glob("*.json"))), 6)
        self.assertEqual(len(list((self.ds / "heatmaps").glob("*.hmap"))), 6)
        again = self.tmp / "ds_again"
        run("synth", "--out", again, "--seed", 11, "--n", 6, "--workers", 3)
        for f in sorted(self.ds.rglob("*")):
            if f.is_file():
                self.assertEqual(f.read_bytes(), (again / f.relative_to(self.ds)).read_bytes(), f)

    def test_solve_then_eval(self):
        out = self.tmp / "solved"
        doc = validated("solve", run("solve", "--keypoints", self.ds / "annotations",
                                     "--out", out).stdout)
        self.assertEqual(doc["solved"], 6)
        ev = validated("eval", run("eval", "--pred", out, "--gt", self.ds).stdout)
        self.assertEqual(ev["pck"], 1.0)
        self.assertLess(ev["joint_errors"]["average"], 0.1)
        table = run("eval", "--pred", out, "--gt", self.ds, "--format", "table").stdout
        self.assertIn("PCK", table)

    def test_refine_then_eval(self):
        out = self.tmp / "labels"
        doc = validated("refine", run("refine", "--heatmaps", self.ds, "--out", out).stdout)
        self.assertEqual(doc["written"] + len(doc["skipped"]), 6)
        manifest = json.loads((out / "manifest.json").read_text())
        self.assertEqual(manifest["count"], doc["written"])
        validated("eval", run("eval", "--pred", out, "--gt", self.ds, "--allow-missing",
                              "--alpha", 0.1).stdout)

    def test_reach(self):
        targets = self.tmp / "targets.json"
        targets.write_text(json.dumps([{"target": [15, 0, 10]}, {"target": [0, 20, 10]}]))
        doc = validated("reach", run("reach", "--targets", targets, "--seeds", 2,
                                     "--seed", 4).stdout)
        self.assertEqual(doc["summary"]["episodes"], 4)
        grid = validated("reach", run("reach", "--seeds", 1, "--seed", 4).stdout)
        self.assertEqual(grid["summary"]["episodes"], 9)

    def test_config_file_with_flags_winning(self):
        cfg = self.tmp / "run.toml"
        cfg.write_text(f'[synth]\nseed = 5\nn = 3\nout = "{self.tmp / "cfg_ds"}"\n')
        doc = validated("synth", run("--config", cfg, "synth").stdout)
        self.assertEqual((doc["seed"], doc["n"]), (5, 3))
        doc = validated("synth", run("--config", cfg, "synth", "--n", 2).stdout)
        self.assertEqual((doc["seed"], doc["n"]), (5, 2))

    def test_demo_matches_golden(self):
        first = run("demo", "--seed", 7, "--n", 100).stdout
        validated("demo", first)
        self.assertEqual(first, run("demo", "--seed", 7, "--n", 100, "--workers", 1).stdout)
        golden = GOLDEN / "demo_seed7_n100.json"
        self.assertTrue(golden.exists(), f"missing golden file {golden}")
        self.assertEqual(first, golden.read_text())
        self.assertIn("PCK", run("demo", "--seed", 7, "--n", 10, "--format", "table").stdout)


if __name__ == "__main__":
    BIN, SCHEMAS, GOLDEN = (Path(a).resolve() for a in sys.argv[1:4])
    unittest.main(argv=sys.argv[:1], verbosity=2)

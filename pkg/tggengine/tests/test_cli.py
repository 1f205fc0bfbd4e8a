import io
import json
import shutil
import tempfile
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.test import SimpleTestCase, override_settings

from tggengine.cli import EXIT_INVALID, EXIT_OK, EXIT_STUCK, EXIT_USAGE, export_dot, run_cli
from tggengine.management.commands.tgg import Command
from tggengine.utils.engine import TransformationEngine
from tggengine.utils.flowgraphs import build_flowgraphs_ruleset
from tggengine.utils.minijava import parse_program

PROGRAM = "void m() {\n    int i = 0;\n    while (i < 3) {\n        i = i + 1;\n    }\n}\n"


class CliTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp)

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    def run_tgg(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        code = run_cli(list(argv), stdout=out, stderr=err)
        return code, out.getvalue(), err.getvalue()


class CommandTests(CliTestCase):
    def test_parse_and_unparse(self):
        code, out, _ = self.run_tgg("parse", self.write("p.mj", PROGRAM))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)["metamodel"], "minijava-ast")
        code, text, _ = self.run_tgg("unparse", self.write("p.json", out))
        self.assertEqual((code, text), (EXIT_OK, PROGRAM))

    def test_forward_backward_and_roundtrip(self):
        source = self.write("p.mj", PROGRAM)
        code, out, _ = self.run_tgg("forward", source)
        self.assertEqual(code, EXIT_OK)
        triple = json.loads(out)
        self.assertEqual(triple["target"]["metamodel"], "flowgraph")
        self.assertTrue(triple["corrs"])
        code, text, _ = self.run_tgg("backward", self.write("t.json", out))
        self.assertEqual((code, text), (EXIT_OK, PROGRAM))
        code, text, _ = self.run_tgg("roundtrip", source)
        self.assertEqual((code, text), (EXIT_OK, PROGRAM))

    def test_backward_accepts_a_bare_flowgraph(self):
        _, out, _ = self.run_tgg("forward", self.write("p.mj", PROGRAM))
        flow = json.loads(out)["target"]
        code, text, _ = self.run_tgg("backward", self.write("f.json", json.dumps(flow)))
        self.assertEqual((code, text), (EXIT_OK, PROGRAM))

    def test_check_and_link(self):
        _, out, _ = self.run_tgg("forward", self.write("p.mj", PROGRAM))
        triple_path = self.write("t.json", out)
        code, verdict, _ = self.run_tgg("check", triple_path)
        self.assertEqual((code, verdict), (EXIT_OK, "accept\n"))

        unlinked = json.loads(out)
        unlinked["corrs"] = []
        code, linked, _ = self.run_tgg("link", self.write("u.json", json.dumps(unlinked)))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(json.loads(linked)["corrs"]), len(json.loads(out)["corrs"]))

        code, verdict, _ = self.run_tgg("check", self.write("u2.json", json.dumps(unlinked)))
        self.assertEqual(code, EXIT_STUCK)
        self.assertTrue(verdict.startswith("reject\nunmarked: "))

    def test_output_file_and_dot(self):
        out_path, dot_path = self.tmp / "out.json", self.tmp / "cfg.dot"
        code, stdout, _ = self.run_tgg("forward", self.write("p.mj", PROGRAM), "-o", str(out_path), "--dot", str(dot_path))
        self.assertEqual((code, stdout), (EXIT_OK, ""))
        self.assertIn("corrs", json.loads(out_path.read_text(encoding="utf-8")))
        dot = dot_path.read_text(encoding="utf-8")
        self.assertTrue(dot.startswith("digraph flowgraph {"))
        self.assertIn('"while (i < 3)"', dot)
        self.assertIn("cfPrev", dot)
        self.assertEqual(list(self.tmp.glob(".*.tmp")), [])

    def test_trace_goes_to_stderr(self):
        code, _, err = self.run_tgg("forward", self.write("p.mj", PROGRAM), "--trace")
        self.assertEqual(code, EXIT_OK)
        lines = err.splitlines()
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[0].startswith("MethodRule forward anchor="))

    @override_settings(TGG_TRACE=True)
    def test_trace_from_settings(self):
        _, _, err = self.run_tgg("roundtrip", self.write("p.mj", PROGRAM))
        self.assertIn("MethodRule backward", err)


class ExitCodeTests(CliTestCase):
    def test_syntax_error(self):
        code, out, err = self.run_tgg("parse", self.write("bad.mj", "void m() { a = ; }"))
        self.assertEqual((code, out), (EXIT_INVALID, ""))
        self.assertIn("line 1, column 16", err)

    def test_stuck(self):
        code, _, err = self.run_tgg("forward", self.write("b.mj", "void m() { break; }"))
        self.assertEqual(code, EXIT_STUCK)
        self.assertIn("stuck", err)

    def test_invalid_json(self):
        code, _, err = self.run_tgg("backward", self.write("x.json", "{not json"))
        self.assertEqual(code, EXIT_INVALID)
        self.assertIn("invalid-json", err)

    def test_malformed_document(self):
        code, _, _ = self.run_tgg("check", self.write("x.json", json.dumps({"source": {}})))
        self.assertEqual(code, EXIT_INVALID)

    def test_usage_errors(self):
        self.assertEqual(self.run_tgg("explode", "x")[0], EXIT_USAGE)
        self.assertEqual(self.run_tgg("parse", str(self.tmp / "missing.mj"))[0], EXIT_USAGE)
        self.assertEqual(self.run_tgg("parse", self.write("p.mj", PROGRAM), "--dot", str(self.tmp / "d.dot"))[0], EXIT_USAGE)
        self.assertEqual(self.run_tgg("check", self.write("t.json", "{}"), "--dot", str(self.tmp / "d.dot"))[0], EXIT_USAGE)
        self.assertFalse((self.tmp / "d.dot").exists())
        self.assertEqual(self.run_tgg("forward", self.write("p.mj", PROGRAM), "--rules", str(self.tmp / "none.json"))[0], EXIT_USAGE)

    def test_invalid_rule_set(self):
        code, _, err = self.run_tgg("forward", self.write("p.mj", PROGRAM), "--rules", self.write("r.json", '{"rules": []}'))
        self.assertEqual(code, EXIT_INVALID)
        self.assertIn("rule set", err)


class DotExportTests(SimpleTestCase):
    def test_corr_edges_only_when_tracing(self):
        ruleset, registries = build_flowgraphs_ruleset()
        triple = TransformationEngine(ruleset, registries).forward(parse_program("void m() { a = 1; }")).triple
        self.assertNotIn("AstToFlow", export_dot(triple))
        traced = export_dot(triple, trace=True)
        self.assertIn("AstToFlow", traced)
        self.assertIn("style=dashed", traced)


class ManagementCommandTests(CliTestCase):
    def test_tgg_command_writes_to_command_stdout(self):
        out = io.StringIO()
        call_command("tgg", "roundtrip", self.write("p.mj", PROGRAM), stdout=out)
        self.assertEqual(out.getvalue(), PROGRAM)

    def test_tgg_command_exit_code(self):
        with self.assertRaises(SystemExit) as ctx:
            call_command("tgg", "forward", self.write("b.mj", "void m() { break; }"), stderr=io.StringIO())
        self.assertEqual(ctx.exception.code, EXIT_STUCK)

    def test_tgg_command_declares_its_options(self):
        usage = Command().create_parser("manage.py", "tgg").format_help()
        for option in ("--output", "--dot", "--trace", "--rules"):
            self.assertIn(option, usage)

    def test_tgg_command_passes_options_through(self):
        out_path, dot_path = self.tmp / "out.json", self.tmp / "cfg.dot"
        call_command("tgg", "forward", self.write("p.mj", PROGRAM), "-o", str(out_path), "--dot", str(dot_path))
        self.assertIn("corrs", json.loads(out_path.read_text(encoding="utf-8")))
        self.assertTrue(dot_path.read_text(encoding="utf-8").startswith("digraph flowgraph {"))


class RepeatabilityTests(CliTestCase):
    programs = sorted(settings.TGG_CORPUS_DIR.glob("*.mj"))[::5]

    def outputs(self, name, *argv, dot=False):
        """Bytes written by two identical runs, as (exit code, output, dot) per run."""
        runs = []
        for attempt in range(2):
            out_path = self.tmp / f"{name}.{attempt}.out"
            extra = ["-o", str(out_path)]
            dot_path = self.tmp / f"{name}.{attempt}.dot"
            if dot:
                extra += ["--dot", str(dot_path)]
            code, _, _ = self.run_tgg(*argv, *extra)
            runs.append((code, out_path.read_bytes(), dot_path.read_bytes() if dot else b""))
        return runs

    def assertRepeatable(self, name, *argv, dot=False):
        first, second = self.outputs(name, *argv, dot=dot)
        self.assertEqual(first[0], EXIT_OK)
        self.assertEqual(first, second)

    def test_every_command_writes_the_same_bytes_twice(self):
        for path in self.programs:
            with self.subTest(program=path.stem):
                stem = path.stem
                self.assertRepeatable(f"{stem}-parse", "parse", str(path))
                ast_path = self.write(f"{stem}.ast.json", (self.tmp / f"{stem}-parse.0.out").read_text(encoding="utf-8"))
                self.assertRepeatable(f"{stem}-unparse", "unparse", ast_path)
                self.assertRepeatable(f"{stem}-forward", "forward", str(path), dot=True)
                triple_path = str(self.tmp / f"{stem}-forward.0.out")
                self.assertRepeatable(f"{stem}-backward", "backward", triple_path, dot=True)
                self.assertRepeatable(f"{stem}-roundtrip", "roundtrip", str(path), dot=True)
                self.assertRepeatable(f"{stem}-check", "check", triple_path)
                self.assertRepeatable(f"{stem}-link", "link", triple_path, dot=True)

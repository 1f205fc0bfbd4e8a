"""Command-line driver for the Flowgraphs transformations.

Exit codes: 0 success, 1 transformation stuck or rejected, 2 parse or
validation error, 3 usage error.
"""
import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import graphviz
from django.conf import settings

from tggengine.utils.engine import TransformationEngine
from tggengine.utils.exceptions import (
    CspFailure,
    GraphError,
    MiniJavaSyntaxError,
    RuleSetError,
    TransformationStuck,
    UnparseError,
)
from tggengine.utils.flowgraphs import METAMODELS, RULESET_PATH, build_flowgraphs_ruleset, control_flow
from tggengine.utils.graph import dumps, graph_from_dict, graph_to_dict, triple_from_dict, triple_to_dict
from tggengine.utils.minijava import parse_program, unparse_program

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STUCK = 1
EXIT_INVALID = 2
EXIT_USAGE = 3

COMMANDS = ("parse", "unparse", "forward", "backward", "roundtrip", "check", "link")
# Commands whose result carries a flowgraph.
DOT_COMMANDS = ("forward", "backward", "roundtrip", "link")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def add_tgg_arguments(parser):
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("input", help="input file, or - for standard input")
    parser.add_argument("-o", "--output", help="write the result here instead of standard output")
    parser.add_argument("--dot", help="also write the control flow as a DOT graph")
    parser.add_argument("--trace", action="store_true", default=None, help="print the rule application trace")
    parser.add_argument("--rules", help="rule set document to use instead of the shipped one")
    return parser


def build_parser():
    return add_tgg_arguments(_Parser(prog="tgg", description="Mini-Java <-> flowgraph transformations"))


def trace_enabled(flag):
    if flag:
        return True
    if settings.configured and getattr(settings, "TGG_TRACE", False):
        return True
    return os.getenv("TGG_TRACE") == "1"


def default_rules():
    if settings.configured:
        return getattr(settings, "TGG_DEFAULT_RULESET", RULESET_PATH)
    return RULESET_PATH


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_dot(triple, trace=False):
    """DOT rendering of the flowgraph of ``triple``.

    Solid edges are cfNext, dotted ones the derived cfPrev; with ``trace``
    the AST nodes reached by corr links are added with dashed corr edges.
    """
    flow = triple.target
    dot = graphviz.Digraph("flowgraph")
    cfg = control_flow(flow)
    order = sorted(cfg.nodes, key=flow.seq)
    for node_id in order:
        dot.node(node_id, label=cfg.nodes[node_id]["txt"] or cfg.nodes[node_id]["type"])
    for source, target in sorted(cfg.edges, key=lambda e: (flow.seq(e[0]), flow.seq(e[1]))):
        dot.edge(source, target, label="cfNext")
    for source, target in sorted(cfg.edges, key=lambda e: (flow.seq(e[1]), flow.seq(e[0]))):
        dot.edge(target, source, label="cfPrev", style="dotted", constraint="false")
    if trace:
        ast = triple.source
        corrs = sorted(triple.corrs.values(), key=lambda c: triple.seq(c.id))
        for corr in corrs:
            node = ast.nodes[corr.source_node]
            dot.node(corr.source_node, label=node.attrs.get("value", node.type), shape="box")
        for corr in corrs:
            if corr.target_node in cfg:
                dot.edge(corr.source_node, corr.target_node, label=corr.type, style="dashed")
    return dot.source


def _read(path):
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_json(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError("invalid-json", f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _flow_graph(data):
    if "target" in data and "corrs" in data:
        return graph_from_dict(data["target"], METAMODELS, prefix="t")
    return graph_from_dict(data, METAMODELS, prefix="t")


def _run(args, stderr):
    if args.dot and args.command not in DOT_COMMANDS:
        raise UsageError(f"--dot needs one of {', '.join(DOT_COMMANDS)}, not {args.command}")
    try:
        ruleset, registries = build_flowgraphs_ruleset(args.rules or default_rules())
    except OSError as exc:
        raise UsageError(f"cannot read rule set: {exc}") from exc
    engine = TransformationEngine(ruleset, registries)
    text = _read(args.input)
    result = None

    if args.command == "parse":
        output = dumps(graph_to_dict(parse_program(text)))
    elif args.command == "unparse":
        output = unparse_program(graph_from_dict(_load_json(text), METAMODELS, prefix="s"))
    elif args.command == "forward":
        result = engine.forward(parse_program(text))
        output = dumps(triple_to_dict(result.triple))
    elif args.command == "backward":
        result = engine.backward(_flow_graph(_load_json(text)))
        output = unparse_program(result.triple.source)
    elif args.command == "roundtrip":
        forward = engine.forward(parse_program(text))
        result = engine.backward(forward.triple.target)
        output = unparse_program(result.triple.source)
    elif args.command == "link":
        triple = triple_from_dict(_load_json(text), METAMODELS)
        result = engine.link(triple.source, triple.target)
        output = dumps(triple_to_dict(result.triple))
    else:
        report = engine.check(triple_from_dict(_load_json(text), METAMODELS))
        lines = [report.verdict] + [f"unmarked: {item}" for item in report.unmarked]
        output = "\n".join(lines) + "\n"
        if trace_enabled(args.trace):
            for record in report.trace:
                stderr.write(record.trace_line() + "\n")
        return output, None, EXIT_OK if report.consistent else EXIT_STUCK

    if result is not None and trace_enabled(args.trace):
        for record in result.trace:
            stderr.write(record.trace_line() + "\n")
    dot = None
    if args.dot:
        dot = export_dot(result.triple, trace=trace_enabled(args.trace))
    return output, dot, EXIT_OK


def run_cli(argv=None, stdout=None, stderr=None):
    """Run one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        output, dot, code = _run(args, stderr)
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (TransformationStuck, CspFailure) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_STUCK
    except (MiniJavaSyntaxError, RuleSetError, GraphError, UnparseError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (KeyError, TypeError) as exc:
        stderr.write(f"error: malformed model document: {exc}\n")
        return EXIT_INVALID

    try:
        if args.output:
            write_atomic(args.output, output)
        else:
            stdout.write(output)
        if dot is not None:
            write_atomic(args.dot, dot)
    except OSError as exc:
        stderr.write(f"usage error: cannot write output: {exc}\n")
        return EXIT_USAGE
    logger.debug("tgg %s %s -> %d", args.command, args.input, code)
    return code


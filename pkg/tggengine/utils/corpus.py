"""Shared engine instance and the corpus health report."""
import logging
from functools import lru_cache
from pathlib import Path

import pandas as pd
from django.conf import settings

from tggengine.utils.engine import TransformationEngine
from tggengine.utils.exceptions import TggError
from tggengine.utils.flowgraphs import build_flowgraphs_ruleset, control_flow
from tggengine.utils.minijava import normalize, parse_program, unparse_program

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["name", "statements", "round_trip_ok", "check_verdict", "cfnext_edges", "error"]


@lru_cache(maxsize=1)
def default_engine():
    ruleset, registries = build_flowgraphs_ruleset(settings.TGG_DEFAULT_RULESET)
    return TransformationEngine(ruleset, registries)


def program_row(name, text, engine=None):
    engine = engine or default_engine()
    row = {"name": name, "statements": None, "round_trip_ok": False, "check_verdict": None, "cfnext_edges": None, "error": ""}
    try:
        ast = parse_program(text)
        row["statements"] = len(ast.nodes_of_type("Stmt"))
        forward = engine.forward(ast)
        row["cfnext_edges"] = control_flow(forward.triple.target).number_of_edges()
        row["check_verdict"] = engine.check(forward.triple).verdict
        backward = engine.backward(forward.triple.target)
        row["round_trip_ok"] = unparse_program(backward.triple.source) == normalize(text)
    except TggError as exc:
        logger.warning("corpus program %s failed: %s", name, exc)
        row["error"] = str(exc)
    return row


def corpus_report(directory=None):
    """One row per ``*.mj`` program of the corpus directory, as a DataFrame."""
    directory = Path(directory or settings.TGG_CORPUS_DIR)
    rows = [
        program_row(path.stem, path.read_text(encoding="utf-8"))
        for path in sorted(directory.glob("*.mj"))
    ]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)

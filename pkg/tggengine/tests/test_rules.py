import copy
import json

from django.test import SimpleTestCase

from tggengine.utils.csp import Var
from tggengine.utils.engine import TransformationEngine
from tggengine.utils.exceptions import RuleSetError
from tggengine.utils.flowgraphs import METAMODELS, RULESET_PATH, build_flowgraphs_ruleset, build_registries
from tggengine.utils.rules import load_ruleset, serialize_ruleset

SHIPPED = json.loads(RULESET_PATH.read_text(encoding="utf-8"))


def rule_named(document, name):
    return next(r for r in document["rules"] if r["name"] == name)


def item(entries, item_id):
    return next(e for e in entries if e["id"] == item_id)


class ShippedRuleSetTests(SimpleTestCase):
    def test_loads(self):
        ruleset, _ = build_flowgraphs_ruleset()
        self.assertEqual(len(ruleset), 8)
        self.assertEqual(ruleset.axiom.name, "MethodRule")
        self.assertEqual(
            [r.name for r in ruleset],
            [
                "MethodRule",
                "AssignmentWithExpRule",
                "AssignmentSimpleRule",
                "DeclarationRule",
                "IfElseRule",
                "WhileRule",
                "ReturnRule",
                "BreakRule",
            ],
        )

    def test_variables_and_positions_are_decoded(self):
        ruleset, _ = build_flowgraphs_ruleset()
        rule = ruleset.rule("AssignmentWithExpRule")
        self.assertEqual(rule.element("lhs_a").variables, {"value": "lhs"})
        stmt_edge = next(e for e in rule.edges if e.id == "e_stmt")
        self.assertEqual(stmt_edge.position, Var("pos"))
        self.assertEqual(rule.temps, ("temp1", "temp2"))
        self.assertEqual(rule.post_processor, "setIndex")

    def test_assignments_become_eq_constraints(self):
        ruleset, _ = build_flowgraphs_ruleset()
        csp = ruleset.rule("BreakRule").effective_csp()
        self.assertEqual([str(c) for c in csp], ["eq($break_f.txt, 'break;')"])

    def test_serialized_rule_set_reloads_equal(self):
        ruleset, registries = build_flowgraphs_ruleset()
        reloaded = load_ruleset(serialize_ruleset(ruleset), METAMODELS, registries.constraints)
        self.assertEqual(reloaded.rules, ruleset.rules)

    def test_dollar_escape_survives_serialization(self):
        document = copy.deepcopy(SHIPPED)
        rule_named(document, "BreakRule")["csp"] = [{"constraint": "eq", "args": ["$$cash", "$$cash"]}]
        ruleset = load_ruleset(json.dumps(document), METAMODELS, build_registries().constraints)
        self.assertEqual(ruleset.rule("BreakRule").csp[0].args, ("$cash", "$cash"))
        self.assertIn('"$$cash"', serialize_ruleset(ruleset))


class InvalidRuleSetTests(SimpleTestCase):
    def codes(self, document):
        with self.assertRaises(RuleSetError) as ctx:
            load_ruleset(json.dumps(document), METAMODELS, build_registries().constraints)
        return {d.code for d in ctx.exception.diagnostics}

    def test_json_errors_carry_a_position(self):
        with self.assertRaises(RuleSetError) as ctx:
            load_ruleset('{"schema": {\n  "source": }', METAMODELS)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (2, 13))

    def test_unknown_metamodel(self):
        document = copy.deepcopy(SHIPPED)
        document["schema"]["target"] = "petri-net"
        with self.assertRaises(RuleSetError) as ctx:
            load_ruleset(json.dumps(document), METAMODELS)
        self.assertIn("petri-net", str(ctx.exception))

    def test_axiom_count(self):
        document = copy.deepcopy(SHIPPED)
        document["rules"] = document["rules"][1:]
        self.assertIn("no-axiom", self.codes(document))
        document = copy.deepcopy(SHIPPED)
        extra = copy.deepcopy(rule_named(document, "MethodRule"))
        extra["name"] = "SecondMethodRule"
        document["rules"].append(extra)
        self.assertIn("multiple-axioms", self.codes(document))

    def test_duplicate_rule(self):
        document = copy.deepcopy(SHIPPED)
        document["rules"].append(copy.deepcopy(rule_named(document, "BreakRule")))
        self.assertIn("duplicate-rule", self.codes(document))

    def test_element_problems(self):
        document = copy.deepcopy(SHIPPED)
        rule = rule_named(document, "DeclarationRule")
        item(rule["elements"], "decl_a")["type"] = "Stmt"
        item(rule["elements"], "stmt_f")["assignments"] = {"txt": 3}
        item(rule["elements"], "init_a")["variables"] = {"colour": "$init"}
        codes = self.codes(document)
        self.assertTrue({"abstract-created", "kind-mismatch", "assigned-and-bound", "undeclared-attribute"} <= codes)

    def test_edge_problems(self):
        document = copy.deepcopy(SHIPPED)
        rule = rule_named(document, "WhileRule")
        item(rule["edges"], "f_stmt").pop("position")
        item(rule["edges"], "f_next")["position"] = 0
        item(rule["edges"], "f_body")["target"] = "ghost"
        item(rule["edges"], "e_cond")["type"] = "parent"
        codes = self.codes(document)
        self.assertTrue({"ordinal-required", "ordinal-forbidden", "dangling-rule-edge", "unknown-edge-type"} <= codes)

    def test_corr_and_binding_problems(self):
        document = copy.deepcopy(SHIPPED)
        rule = rule_named(document, "BreakRule")
        item(rule["elements"], "next2next")["target"] = "block_a"
        rule["bindings"] = [{"from": "break_a", "to": "next_f", "resolver": "findBreakTarget"}]
        codes = self.codes(document)
        self.assertTrue({"bad-corr", "binding-domain"} <= codes)

    def test_csp_problems(self):
        document = copy.deepcopy(SHIPPED)
        rule = rule_named(document, "IfElseRule")
        rule["csp"] = [
            {"constraint": "reverse", "args": ["$cond"]},
            {"constraint": "addPrefix", "args": ["if (", "$cond"]},
            {"constraint": "addSuffix", "args": ["$temp1", ")", "$label"]},
        ]
        rule["temps"] = ["$temp1", "$txt"]
        codes = self.codes(document)
        self.assertTrue({"unknown-constraint", "arity-mismatch", "unhoused-variable", "temp-conflict"} <= codes)

    def test_csp_that_cannot_be_ordered_is_rejected_by_the_engine(self):
        document = copy.deepcopy(SHIPPED)
        rule = rule_named(document, "WhileRule")
        rule["csp"] = [{"constraint": "concat", "args": ["(", "$cond", "$temp1", "$txt"]}]
        registries = build_registries()
        ruleset = load_ruleset(json.dumps(document), METAMODELS, registries.constraints)
        with self.assertRaises(RuleSetError) as ctx:
            TransformationEngine(ruleset, registries)
        self.assertEqual(ctx.exception.diagnostics[0].code, "csp-unsortable")

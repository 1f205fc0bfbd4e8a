import string

import hypothesis.strategies as st
from django.test import SimpleTestCase
from hypothesis import given

from tggengine.utils.exceptions import MiniJavaSyntaxError, UnparseError
from tggengine.utils.graph import Graph, isomorphic
from tggengine.utils.minijava import AST_METAMODEL, normalize, parse_program, tokenize, unparse_program
from tggengine.utils.operators import OPERATOR_NAMES

names = st.text(alphabet=string.ascii_lowercase, min_size=1, max_size=5).filter(
    lambda s: s not in {"if", "int", "void", "while", "else", "return", "break"}
)
atoms = names | st.integers(min_value=0, max_value=999).map(str)
expressions = st.recursive(
    atoms,
    lambda inner: st.builds(lambda a, op, b: f"({a} {op} {b})", inner, st.sampled_from(OPERATOR_NAMES), inner),
    max_leaves=6,
)


@st.composite
def statements(draw, depth=0):
    kinds = ["decl", "assign", "return"] + (["if", "while"] if depth < 2 else [])
    kind = draw(st.sampled_from(kinds))
    if kind == "decl":
        init = draw(st.one_of(st.just(""), expressions))
        return f"int {draw(names)}{' = ' + init if init else ''};"
    if kind == "assign":
        return f"{draw(names)} = {draw(expressions)};"
    if kind == "return":
        return f"return {draw(expressions)};"
    body = " ".join(draw(st.lists(statements(depth + 1), max_size=3)))
    if kind == "while":
        return f"while ({draw(expressions)}) {{ {body} }}"
    other = " ".join(draw(st.lists(statements(depth + 1), max_size=2)))
    return f"if ({draw(expressions)}) {{ {body} }} else {{ {other} }}"


programs = st.builds(
    lambda name, body: f"void {name}() {{ {' '.join(body)} }}",
    names,
    st.lists(statements(), max_size=4),
)


def types_in_order(ast):
    return [ast.nodes[n].type for n in ast.preorder()]


class TokenizerTests(SimpleTestCase):
    def test_longest_operator_wins(self):
        kinds = [(t.kind, t.lexeme) for t in tokenize("a<=b==c")]
        self.assertEqual(
            kinds,
            [("ident", "a"), ("operator", "<="), ("ident", "b"), ("operator", "=="), ("ident", "c"), ("eof", "")],
        )

    def test_positions_and_comments(self):
        tokens = tokenize("void m() {\n  // note\n  x = 1;\n}")
        x = next(t for t in tokens if t.lexeme == "x")
        self.assertEqual((x.line, x.column), (3, 3))

    def test_unexpected_character(self):
        with self.assertRaises(MiniJavaSyntaxError) as ctx:
            tokenize("void m() { a = 1 # 2; }")
        self.assertEqual((ctx.exception.line, ctx.exception.column), (1, 18))


class ParserTests(SimpleTestCase):
    def test_assignment_with_operator(self):
        ast = parse_program("void m() { a = b + 3; }")
        self.assertEqual(
            types_in_order(ast),
            ["Program", "Method", "Name", "Block", "Assign", "Ident", "BinOp", "Expr", "Expr"],
        )
        binop = ast.nodes_of_type("BinOp")[0]
        self.assertEqual(binop.attrs["value"], "+")
        left, right = ast.children(binop.id, "child")
        self.assertEqual((ast.nodes[left].attrs["value"], ast.nodes[right].attrs["value"]), ("b", "3"))

    def test_operands_keep_needed_parentheses(self):
        ast = parse_program("void m() { a = (b - c) * (d * e); f = a - (b - c); g = (a + b) + c; }")
        operands = [ast.nodes[n].attrs["value"] for n in ast.preorder() if ast.nodes[n].type == "Expr"]
        self.assertEqual(operands, ["(b - c)", "(d * e)", "a", "(b - c)", "a + b", "c"])

    def test_statement_indices_follow_document_order(self):
        ast = parse_program("void m() { int i = 0; while (i < 3) { i = i + 1; } return i; }")
        stmts = [ast.nodes[n] for n in ast.preorder() if AST_METAMODEL.is_subtype(ast.nodes[n].type, "Stmt")]
        self.assertEqual([(s.type, s.attrs["index"]) for s in stmts], [("Decl", 0), ("While", 1), ("Assign", 2), ("Return", 3)])

    def test_if_without_else_gets_empty_block(self):
        ast = parse_program("void m() { if (x) { y = 1; } }")
        if_node = ast.nodes_of_type("If")[0].id
        cond, then_block, else_block = ast.children(if_node, "child")
        self.assertEqual(ast.nodes[cond].attrs["value"], "x")
        self.assertEqual(ast.children(else_block, "child"), [])

    def test_optional_parts_are_empty_expressions(self):
        ast = parse_program("int m() { int x; return; }")
        values = [n.attrs["value"] for n in ast.nodes.values() if n.type == "Expr"]
        self.assertEqual(values, ["", ""])

    def test_syntax_errors_report_position_and_expectation(self):
        with self.assertRaises(MiniJavaSyntaxError) as ctx:
            parse_program("void m() {\n  a = ;\n}")
        self.assertEqual((ctx.exception.line, ctx.exception.column), (2, 7))
        self.assertEqual(ctx.exception.expected, ("expression",))
        with self.assertRaises(MiniJavaSyntaxError) as ctx:
            parse_program("void m() { a = 1;")
        self.assertEqual(ctx.exception.expected, ("'}'",))
        with self.assertRaises(MiniJavaSyntaxError):
            parse_program("")


class UnparserTests(SimpleTestCase):
    def test_canonical_layout(self):
        text = "int  f ( ) { int x=1; if(x<2){x=x+1;}else{ } while (x) { break; } return x; }"
        self.assertEqual(
            normalize(text),
            "int f() {\n"
            "    int x = 1;\n"
            "    if (x < 2) {\n"
            "        x = x + 1;\n"
            "    }\n"
            "    while (x) {\n"
            "        break;\n"
            "    }\n"
            "    return x;\n"
            "}\n",
        )

    def test_operators_are_printed_verbatim(self):
        text = "void m() { while (i < 3 && j >= 0) { a = b && c; } }"
        canonical = normalize(text)
        self.assertEqual(
            canonical,
            "void m() {\n"
            "    while (i < 3 && j >= 0) {\n"
            "        a = b && c;\n"
            "    }\n"
            "}\n",
        )
        self.assertNotIn("&amp;", canonical)
        self.assertEqual(normalize(canonical), canonical)

    def test_else_is_printed_when_not_empty(self):
        self.assertIn("} else {", normalize("void m() { if (a) { } else { b = 1; } }"))

    def test_missing_program_node(self):
        with self.assertRaises(UnparseError):
            unparse_program(Graph(AST_METAMODEL))

    def test_malformed_statement(self):
        ast = parse_program("void m() { a = 1; }")
        assign = ast.nodes_of_type("Assign")[0].id
        ast.remove_edge(ast.out_edges(assign, "child")[1].id)
        with self.assertRaises(UnparseError) as ctx:
            unparse_program(ast)
        self.assertEqual(ctx.exception.node_id, assign)

    @given(programs)
    def test_unparse_is_a_fixpoint_of_parse(self, text):
        canonical = normalize(text)
        self.assertEqual(normalize(canonical), canonical)
        self.assertTrue(isomorphic(parse_program(text), parse_program(canonical)))

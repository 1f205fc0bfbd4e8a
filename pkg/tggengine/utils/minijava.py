"""Mini-Java front end: tokenizer, recursive-descent parser and unparser.

Grammar::

    program := method+
    method  := ("void" | "int") ident "(" ")" block
    block   := "{" stmt* "}"
    stmt    := decl | assign | if | while | return | break
    decl    := "int" ident ["=" expr] ";"
    assign  := ident "=" expr ";"
    if      := "if" "(" expr ")" block ["else" block]
    while   := "while" "(" expr ")" block
    return  := "return" [expr] ";"
    break   := "break" ";"

Expressions are parsed by precedence climbing over the shared operator
table and stored as canonical text (single spaces, minimal parentheses).
There is no IntLit node type: literals and identifiers in expression
slots, and both operands of a BinOp, are plain ``Expr`` nodes whose
``value`` is that text. Only assignment targets and declared names are
``Ident``.
"""
import re
from dataclasses import dataclass

from django.template import Context, Engine

from tggengine.utils.exceptions import MiniJavaSyntaxError, UnparseError
from tggengine.utils.graph import INT, STRING, EdgeType, Graph, Metamodel, NodeType
from tggengine.utils.operators import OPERATOR_PREC, SYMBOLS

AST_METAMODEL = Metamodel(
    "minijava-ast",
    node_types=[
        NodeType("AstNode", abstract=True),
        NodeType("Program", supertype="AstNode"),
        NodeType("Method", {"type": STRING}, supertype="AstNode"),
        NodeType("Name", {"value": STRING}, supertype="AstNode"),
        NodeType("Block", supertype="AstNode"),
        NodeType("Stmt", {"index": INT}, supertype="AstNode", abstract=True),
        NodeType("Decl", supertype="Stmt"),
        NodeType("Assign", supertype="Stmt"),
        NodeType("If", supertype="Stmt"),
        NodeType("While", supertype="Stmt"),
        NodeType("Return", supertype="Stmt"),
        NodeType("Break", supertype="Stmt"),
        NodeType("Expr", {"value": STRING}, supertype="AstNode"),
        NodeType("Ident", supertype="Expr"),
        NodeType("BinOp", supertype="Expr"),
    ],
    edge_types=[EdgeType("child", "AstNode", "AstNode", ordered=True, containment=True)],
)

KEYWORDS = frozenset({"void", "int", "if", "else", "while", "return", "break"})
PUNCT = frozenset({"(", ")", "{", "}", ";", "="})

TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>//[^\n]*)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>[0-9]+)|(?P<symbol>"
    + "|".join(re.escape(s) for s in SYMBOLS)
    + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    line: int
    column: int


def tokenize(text):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        found = TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if found is None:
            raise MiniJavaSyntaxError(f"unexpected character {text[pos]!r}", line, column)
        lexeme = found.group()
        group = found.lastgroup
        if group == "ident":
            tokens.append(Token("keyword" if lexeme in KEYWORDS else "ident", lexeme, line, column))
        elif group == "int":
            tokens.append(Token("int-lit", lexeme, line, column))
        elif group == "symbol":
            tokens.append(Token("punct" if lexeme in PUNCT else "operator", lexeme, line, column))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = found.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --- expressions ----------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    text: str


@dataclass(frozen=True)
class BinaryExpr:
    op: str
    left: object
    right: object


def render(expr):
    if isinstance(expr, Atom):
        return expr.text
    return f"{operand_text(expr, 'left')} {expr.op} {operand_text(expr, 'right')}"


def operand_text(expr, side):
    """Text of one operand of ``expr`` with the parentheses its position needs."""
    operand = expr.left if side == "left" else expr.right
    text = render(operand)
    if isinstance(operand, BinaryExpr):
        inner, outer = OPERATOR_PREC[operand.op], OPERATOR_PREC[expr.op]
        if inner < outer or (side == "right" and inner == outer):
            return f"({text})"
    return text


class Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0
        self.graph = Graph(AST_METAMODEL, prefix="s")
        self.index = 0

    @property
    def current(self):
        return self.tokens[self.pos]

    def error(self, expected):
        token = self.current
        found = "end of input" if token.kind == "eof" else repr(token.lexeme)
        raise MiniJavaSyntaxError(
            f"expected {' or '.join(expected)}, found {found}", token.line, token.column, expected
        )

    def accept(self, lexeme):
        if self.current.lexeme == lexeme and self.current.kind in ("keyword", "punct", "operator"):
            self.pos += 1
            return True
        return False

    def expect(self, lexeme):
        if not self.accept(lexeme):
            self.error([repr(lexeme)])

    def expect_ident(self):
        token = self.current
        if token.kind != "ident":
            self.error(["identifier"])
        self.pos += 1
        return token.lexeme

    def add(self, type_name, parent=None, position=None, **attrs):
        node_id = self.graph.add_node(type_name, attrs)
        if parent is not None:
            self.graph.add_edge("child", parent, node_id, position)
        return node_id

    def parse_program(self):
        program = self.add("Program")
        count = 0
        while self.current.kind != "eof" or count == 0:
            self.parse_method(program, count)
            count += 1
        return self.graph

    def parse_method(self, program, position):
        if self.current.lexeme not in ("void", "int") or self.current.kind != "keyword":
            self.error(["'void'", "'int'"])
        return_type = self.current.lexeme
        self.pos += 1
        name = self.expect_ident()
        self.expect("(")
        self.expect(")")
        self.index = 0
        method = self.add("Method", program, position, type=return_type)
        self.add("Name", method, 0, value=name)
        self.parse_block(method, 1)

    def parse_block(self, parent, position):
        block = self.add("Block", parent, position)
        self.expect("{")
        count = 0
        while not self.accept("}"):
            if self.current.kind == "eof":
                self.error(["'}'"])
            self.parse_statement(block, count)
            count += 1
        return block

    def statement(self, type_name, block, position):
        node = self.add(type_name, block, position, index=self.index)
        self.index += 1
        return node

    def parse_statement(self, block, position):
        token = self.current
        if token.kind == "keyword" and token.lexeme == "int":
            self.pos += 1
            node = self.statement("Decl", block, position)
            self.add("Ident", node, 0, value=self.expect_ident())
            init = render(self.parse_expression()) if self.accept("=") else ""
            self.add("Expr", node, 1, value=init)
            self.expect(";")
        elif token.kind == "ident":
            self.pos += 1
            node = self.statement("Assign", block, position)
            self.add("Ident", node, 0, value=token.lexeme)
            self.expect("=")
            rhs = self.parse_expression()
            if isinstance(rhs, BinaryExpr):
                binop = self.add("BinOp", node, 1, value=rhs.op)
                self.add("Expr", binop, 0, value=operand_text(rhs, "left"))
                self.add("Expr", binop, 1, value=operand_text(rhs, "right"))
            else:
                self.add("Expr", node, 1, value=render(rhs))
            self.expect(";")
        elif token.lexeme == "if" and token.kind == "keyword":
            self.pos += 1
            node = self.statement("If", block, position)
            self.expect("(")
            self.add("Expr", node, 0, value=render(self.parse_expression()))
            self.expect(")")
            self.parse_block(node, 1)
            if self.accept("else"):
                self.parse_block(node, 2)
            else:
                self.add("Block", node, 2)
        elif token.lexeme == "while" and token.kind == "keyword":
            self.pos += 1
            node = self.statement("While", block, position)
            self.expect("(")
            self.add("Expr", node, 0, value=render(self.parse_expression()))
            self.expect(")")
            self.parse_block(node, 1)
        elif token.lexeme == "return" and token.kind == "keyword":
            self.pos += 1
            node = self.statement("Return", block, position)
            value = "" if self.current.lexeme == ";" else render(self.parse_expression())
            self.add("Expr", node, 0, value=value)
            self.expect(";")
        elif token.lexeme == "break" and token.kind == "keyword":
            self.pos += 1
            self.statement("Break", block, position)
            self.expect(";")
        else:
            self.error(["statement"])

    def parse_expression(self, min_prec=0):
        left = self.parse_atom()
        while self.current.kind == "operator" and OPERATOR_PREC[self.current.lexeme] >= min_prec:
            op = self.current.lexeme
            self.pos += 1
            right = self.parse_expression(OPERATOR_PREC[op] + 1)
            left = BinaryExpr(op, left, right)
        return left

    def parse_atom(self):
        token = self.current
        if token.kind in ("ident", "int-lit"):
            self.pos += 1
            return Atom(token.lexeme)
        if self.accept("("):
            inner = self.parse_expression()
            self.expect(")")
            return inner
        self.error(["expression"])


def parse_program(text):
    """Parse mini-Java source into an AST graph."""
    return Parser(text).parse_program()


# --- unparsing ------------------------------------------------------------------

TEMPLATES = Engine(autoescape=False)

LINES = {
    "Method": TEMPLATES.from_string("{{ type }} {{ name }}() {"),
    "Decl": TEMPLATES.from_string("int {{ name }}{% if init %} = {{ init }}{% endif %};"),
    "Assign": TEMPLATES.from_string("{{ lhs }} = {{ rhs }};"),
    "Header": TEMPLATES.from_string("{{ keyword }} ({{ cond }})"),
    "Else": TEMPLATES.from_string("} else {"),
    "Return": TEMPLATES.from_string("return{% if value %} {{ value }}{% endif %};"),
    "Break": TEMPLATES.from_string("break;"),
}

INDENT = "    "


def _line(kind, **values):
    return LINES[kind].render(Context(values, autoescape=False))


def _children(ast, node_id, *expected):
    children = ast.children(node_id, "child")
    if len(children) != len(expected):
        raise UnparseError(node_id, f"expected {len(expected)} children, found {len(children)}")
    for child, type_name in zip(children, expected):
        if not AST_METAMODEL.is_subtype(ast.nodes[child].type, type_name):
            raise UnparseError(child, f"expected a {type_name}, found {ast.nodes[child].type}")
    return children


def _value(ast, node_id, attr="value"):
    try:
        return ast.nodes[node_id].attrs[attr]
    except KeyError:
        raise UnparseError(node_id, f"missing attribute {attr}") from None


def expression_text(ast, node_id):
    node = ast.nodes[node_id]
    if node.type == "BinOp":
        left, right = _children(ast, node_id, "Expr", "Expr")
        return f"{_value(ast, left)} {_value(ast, node_id)} {_value(ast, right)}"
    _children(ast, node_id)
    return _value(ast, node_id)


def statement_text(ast, node_id):
    """The text line a simple statement (or a compound header) unparses to."""
    node = ast.node(node_id)
    if node.type == "Decl":
        name, init = _children(ast, node_id, "Ident", "Expr")
        return _line("Decl", name=_value(ast, name), init=expression_text(ast, init))
    if node.type == "Assign":
        lhs, rhs = _children(ast, node_id, "Ident", "Expr")
        return _line("Assign", lhs=_value(ast, lhs), rhs=expression_text(ast, rhs))
    if node.type == "Return":
        (value,) = _children(ast, node_id, "Expr")
        return _line("Return", value=expression_text(ast, value))
    if node.type == "Break":
        _children(ast, node_id)
        return _line("Break")
    if node.type in ("If", "While"):
        cond = ast.children(node_id, "child")[0]
        return _line("Header", keyword=node.type.lower(), cond=expression_text(ast, cond))
    raise UnparseError(node_id, f"{node.type} is not a statement")


def _unparse_block(ast, block_id, depth, lines):
    for stmt in ast.children(block_id, "child"):
        node = ast.nodes[stmt]
        pad = INDENT * depth
        if not AST_METAMODEL.is_subtype(node.type, "Stmt"):
            raise UnparseError(stmt, f"{node.type} cannot appear in a block")
        if node.type == "If":
            _, then_block, else_block = _children(ast, stmt, "Expr", "Block", "Block")
            lines.append(pad + statement_text(ast, stmt) + " {")
            _unparse_block(ast, then_block, depth + 1, lines)
            if ast.children(else_block, "child"):
                lines.append(pad + _line("Else"))
                _unparse_block(ast, else_block, depth + 1, lines)
            lines.append(pad + "}")
        elif node.type == "While":
            _, body = _children(ast, stmt, "Expr", "Block")
            lines.append(pad + statement_text(ast, stmt) + " {")
            _unparse_block(ast, body, depth + 1, lines)
            lines.append(pad + "}")
        else:
            lines.append(pad + statement_text(ast, stmt))


def unparse_program(ast):
    """Canonical source text of an AST graph."""
    roots = [n for n in ast.nodes.values() if n.type == "Program"]
    if len(roots) != 1:
        raise UnparseError("-", f"expected one Program node, found {len(roots)}")
    program = roots[0].id
    methods = ast.children(program, "child")
    if not methods:
        raise UnparseError(program, "program has no method")
    lines = []
    for method in methods:
        if ast.nodes[method].type != "Method":
            raise UnparseError(method, f"expected a Method, found {ast.nodes[method].type}")
        name, body = _children(ast, method, "Name", "Block")
        lines.append(_line("Method", type=_value(ast, method, "type"), name=_value(ast, name)))
        _unparse_block(ast, body, 1, lines)
        lines.append("}")
    return "\n".join(lines) + "\n"


def normalize(text):
    return unparse_program(parse_program(text))

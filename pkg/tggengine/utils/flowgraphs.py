"""The Flowgraphs case: mini-Java ASTs to control-flow graphs and back."""
import logging
from pathlib import Path

import networkx as nx

from tggengine.utils.csp import ConstraintDef, default_registry, split_on
from tggengine.utils.engine import Direction, Registries
from tggengine.utils.exceptions import PostConditionFailure, ResolverFailure
from tggengine.utils.graph import STRING, EdgeType, Metamodel, NodeType
from tggengine.utils.minijava import AST_METAMODEL
from tggengine.utils.operators import join_parts, normalize_ws
from tggengine.utils.rules import SOURCE, load_ruleset

logger = logging.getLogger(__name__)

RULESET_PATH = Path(__file__).resolve().parent.parent / "rulesets" / "flowgraphs.json"

FLOW_METAMODEL = Metamodel(
    "flowgraph",
    node_types=[
        NodeType("FlowNode", {"txt": STRING}, abstract=True),
        NodeType("Block", supertype="FlowNode"),
        NodeType("Method", {"returnType": STRING}, supertype="Block"),
        NodeType("Exit", supertype="FlowNode"),
        NodeType("SimpleStmt", supertype="FlowNode"),
        NodeType("If", supertype="FlowNode"),
        NodeType("Loop", supertype="FlowNode"),
        NodeType("Return", supertype="FlowNode"),
        NodeType("Break", supertype="FlowNode"),
    ],
    edge_types=[
        EdgeType("stmts", "Block", "FlowNode", ordered=True, containment=True),
        EdgeType("branchTrue", "If", "Block", containment=True),
        EdgeType("branchFalse", "If", "Block", containment=True),
        EdgeType("body", "Loop", "Block", containment=True),
        EdgeType("exit", "Method", "Exit", containment=True),
        EdgeType("cfNext", "FlowNode", "FlowNode"),
        EdgeType("join", "If", "FlowNode"),
    ],
)

CORR_METAMODEL = Metamodel(
    "ast2flow",
    edge_types=[
        EdgeType("AstCorr", "AstNode", "FlowNode", abstract=True),
        EdgeType("AstToFlow", "AstNode", "FlowNode", supertype="AstCorr"),
        EdgeType("AstToExit", "Method", "Exit", supertype="AstCorr"),
    ],
    external_endpoints=True,
)

METAMODELS = {m.name: m for m in (AST_METAMODEL, FLOW_METAMODEL, CORR_METAMODEL)}

FLOW_STATEMENTS = ("SimpleStmt", "If", "Loop", "Return", "Break")


# --- case constraints -------------------------------------------------------------

def _strip_prefix(prefix, base, whole):
    if not whole.startswith(prefix):
        return None
    return (whole[len(prefix):],)


def split_optional(whole, sep):
    """Split ``whole`` at ``sep`` (first whitespace for an empty separator).

    A missing separator yields ``(whole, "")``.
    """
    if not sep:
        parts = whole.strip().split(None, 1)
        return (parts[0], parts[1].strip()) if len(parts) == 2 else (whole.strip(), "")
    return split_on(whole, sep) or (whole.strip(), "")


def _join_optional(sep, left, right):
    return join_parts(left, sep, right) if right else left


def _join_right(sep, left, right, whole):
    head, tail = split_optional(whole, sep)
    return (tail,) if head == left else None


def _join_check(sep, left, right, whole):
    if normalize_ws(whole) == normalize_ws(_join_optional(sep, left, right)):
        return True
    return split_optional(whole, sep) == (left, right)


ADD_PREFIX = ConstraintDef("addPrefix", 3, {
    "BBF": lambda prefix, base, whole: (prefix + base,),
    "BFB": _strip_prefix,
    "BBB": lambda prefix, base, whole: prefix + base == whole,
})

JOIN_OPTIONAL = ConstraintDef("joinOptional", 4, {
    "BBBF": lambda sep, left, right, whole: (_join_optional(sep, left, right),),
    "BFFB": lambda sep, left, right, whole: split_optional(whole, sep),
    "BBFB": _join_right,
    "BBBB": _join_check,
})


# --- resolvers ----------------------------------------------------------------------

def _enclosing_block(ast, node_id):
    parent = ast.parent(node_id)
    if parent is None or ast.nodes[parent].type != "Block":
        raise ResolverFailure(f"{node_id} is not a statement of a block")
    return parent


def find_next_flow_node(node_id, triple):
    """The AST node whose flow correspondent follows ``node_id`` in control flow.

    Next sibling first; at the end of a block, the While owning the block,
    the successor of the owning If, or the Method (whose Exit follows).
    """
    ast = triple.source
    block = _enclosing_block(ast, node_id)
    siblings = ast.children(block, "child")
    position = siblings.index(node_id)
    if position + 1 < len(siblings):
        return siblings[position + 1]
    owner = ast.parent(block)
    owner_type = ast.nodes[owner].type if owner is not None else None
    if owner_type in ("Method", "While"):
        return owner
    if owner_type == "If":
        return find_next_flow_node(owner, triple)
    raise ResolverFailure(f"block of {node_id} belongs to no method")


def find_break_target(node_id, triple):
    ast = triple.source
    current = node_id
    while current is not None:
        current = ast.parent(current)
        if current is not None and ast.nodes[current].type == "While":
            return find_next_flow_node(current, triple)
        if current is not None and ast.nodes[current].type == "Method":
            break
    raise ResolverFailure(f"break {node_id} is outside any loop")


def find_enclosing_method(node_id, triple):
    ast = triple.source
    current = ast.parent(node_id)
    while current is not None:
        if ast.nodes[current].type == "Method":
            return current
        current = ast.parent(current)
    raise ResolverFailure(f"{node_id} is outside any method")


# --- post-processing ---------------------------------------------------------------

def enclosing_flow_method(flow, node_id):
    current = node_id
    while current is not None and flow.nodes[current].type != "Method":
        current = flow.parent(current)
    return current


def statement_order(flow, method_id):
    """Flow statements of a method in document order."""
    return [n for n in flow.preorder(method_id) if flow.nodes[n].type in FLOW_STATEMENTS]


def _flow_index(flow, flow_id):
    method = enclosing_flow_method(flow, flow_id)
    order = statement_order(flow, method) if method is not None else []
    if flow_id not in order:
        raise PostConditionFailure(f"{flow_id} is not a statement of any method")
    return order.index(flow_id)


def set_index(match, triple, direction):
    """Give each AST statement created by a backward application its document index.

    In check and link the indices of the matched statements are compared
    against the flowgraph instead.
    """
    direction = Direction(direction)
    is_stmt = lambda node: node is not None and triple.source.metamodel.is_subtype(node.type, "Stmt")
    if direction in (Direction.CHECK, Direction.LINK):
        for ast_id, flow_id in match.links.items():
            node = triple.source.nodes.get(ast_id)
            if not is_stmt(node):
                continue
            expected = _flow_index(triple.target, flow_id)
            if node.attrs.get("index") != expected:
                raise PostConditionFailure(f"{ast_id} has index {node.attrs.get('index')}, flow order says {expected}")
        return
    if direction is not Direction.BACKWARD:
        return
    for node_id in match.created.values():
        node = triple.source.nodes.get(node_id)
        if not is_stmt(node):
            continue
        flow_id = triple.corr_of(node_id, SOURCE, "AstToFlow")
        triple.source.set_attribute(node_id, "index", _flow_index(triple.target, flow_id))


# --- control flow -------------------------------------------------------------------

def _only(flow, node_id, edge_type):
    targets = flow.children(node_id, edge_type)
    return targets[0] if targets else None


def _entry(flow, block_id, fallback):
    stmts = flow.children(block_id, "stmts") if block_id else []
    return stmts[0] if stmts else fallback


def control_flow(flow):
    """The complete cfNext relation of a flowgraph.

    Stored cfNext edges plus the derived entry edges from a Method, If or
    Loop into the first statement of their blocks.
    """
    result = nx.DiGraph()
    for node in flow.nodes.values():
        if node.type != "Block":
            result.add_node(node.id, type=node.type, txt=node.attrs.get("txt", ""))
    for edge in flow.edges.values():
        if edge.type == "cfNext":
            result.add_edge(edge.source, edge.target)
    entries = []
    for node in flow.nodes.values():
        if node.type == "Method":
            entries.append((node.id, _entry(flow, node.id, _only(flow, node.id, "exit"))))
        elif node.type == "If":
            join = _only(flow, node.id, "join")
            for branch in ("branchTrue", "branchFalse"):
                entries.append((node.id, _entry(flow, _only(flow, node.id, branch), join)))
        elif node.type == "Loop":
            entries.append((node.id, _entry(flow, _only(flow, node.id, "body"), node.id)))
    result.add_edges_from((u, v) for u, v in entries if v is not None)
    return result


# --- assembly ------------------------------------------------------------------------

def build_registries():
    constraints = default_registry()
    constraints.register(ADD_PREFIX)
    constraints.register(JOIN_OPTIONAL)
    registries = Registries(constraints)
    registries.register_resolver("findNextFlowNode", find_next_flow_node)
    registries.register_resolver("findBreakTarget", find_break_target)
    registries.register_resolver("findEnclosingMethod", find_enclosing_method)
    registries.register_post_processor("setIndex", set_index)
    return registries


def build_flowgraphs_ruleset(path=None):
    """The Flowgraphs rule set and its registries.

    ``path`` overrides the shipped rule set document.
    """
    registries = build_registries()
    document = Path(path or RULESET_PATH).read_text(encoding="utf-8")
    ruleset = load_ruleset(document, METAMODELS, registries.constraints)
    logger.debug("loaded %d rules from %s", len(ruleset), path or RULESET_PATH)
    return ruleset, registries

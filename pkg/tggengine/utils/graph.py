"""Typed attributed graphs, metamodels and triple models.

Every model the engine touches (the mini-Java AST, the flowgraph and the
correspondence links between them) is an instance of the classes below.
Mutations validate eagerly and raise :class:`GraphError`; ``conforms`` reports
the same conditions as a list of diagnostics for graphs built elsewhere.
"""
import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field

import networkx as nx
from networkx.algorithms import isomorphism

from tggengine.utils.exceptions import Diagnostic, GraphError

STRING = "string"
INT = "int"
KINDS = (STRING, INT)


@dataclass(frozen=True)
class NodeType:
    name: str
    attributes: dict = field(default_factory=dict)
    supertype: str = None
    abstract: bool = False


@dataclass(frozen=True)
class EdgeType:
    name: str
    source: str
    target: str
    ordered: bool = False
    containment: bool = False
    supertype: str = None
    abstract: bool = False


def kind_matches(kind, value):
    if kind == STRING:
        return isinstance(value, str)
    if kind == INT:
        return isinstance(value, int) and not isinstance(value, bool)
    return False


class Metamodel:
    """A named set of node types and edge types.

    A correspondence metamodel declares no node types of its own; its edge
    types are the corr types, whose endpoints live in the source and target
    metamodels (``external_endpoints=True``).
    """

    def __init__(self, name, node_types=(), edge_types=(), external_endpoints=False):
        self.name = name
        self.external_endpoints = external_endpoints
        self.node_types = {}
        self.edge_types = {}
        for node_type in node_types:
            if node_type.name in self.node_types:
                raise GraphError("duplicate-type", f"node type {node_type.name} declared twice in {name}")
            self.node_types[node_type.name] = node_type
        for edge_type in edge_types:
            if edge_type.name in self.edge_types:
                raise GraphError("duplicate-type", f"edge type {edge_type.name} declared twice in {name}")
            self.edge_types[edge_type.name] = edge_type
        problems = self.validate()
        if problems:
            raise GraphError(problems[0].code, "; ".join(str(p) for p in problems))

    def validate(self):
        problems = []
        for registry in (self.node_types, self.edge_types):
            for type_ in registry.values():
                seen = {type_.name}
                parent = type_.supertype
                while parent is not None:
                    if parent not in registry:
                        problems.append(Diagnostic("unknown-supertype", f"{parent} is not declared", type_.name))
                        break
                    if parent in seen:
                        problems.append(Diagnostic("cyclic-supertype", "supertype chain is cyclic", type_.name))
                        break
                    seen.add(parent)
                    parent = registry[parent].supertype
        for node_type in self.node_types.values():
            for attr, kind in node_type.attributes.items():
                if kind not in KINDS:
                    problems.append(Diagnostic("unknown-kind", f"attribute {attr} has kind {kind}", node_type.name))
        if not self.external_endpoints:
            for edge_type in self.edge_types.values():
                for end in (edge_type.source, edge_type.target):
                    if end not in self.node_types:
                        problems.append(Diagnostic("unknown-type", f"endpoint {end} is not declared", edge_type.name))
        return problems

    def _ancestry(self, registry, name):
        while name is not None:
            yield name
            name = registry[name].supertype if name in registry else None

    def is_subtype(self, name, ancestor):
        return ancestor in self._ancestry(self.node_types, name)

    def is_edge_subtype(self, name, ancestor):
        return ancestor in self._ancestry(self.edge_types, name)

    def attributes_of(self, type_name):
        merged = {}
        for name in reversed(list(self._ancestry(self.node_types, type_name))):
            merged.update(self.node_types[name].attributes)
        return merged

    def attribute_kind(self, type_name, attr):
        return self.attributes_of(type_name).get(attr)

    def edge_type_index(self, name):
        return list(self.edge_types).index(name)

    def __repr__(self):
        return f"Metamodel({self.name!r})"


@dataclass
class Node:
    id: str
    type: str
    attrs: dict = field(default_factory=dict)


@dataclass
class Edge:
    id: str
    type: str
    source: str
    target: str
    position: int = None


class Graph:
    """Mutable typed graph; single writer, ids allocated in order."""

    def __init__(self, metamodel, prefix="n"):
        self.metamodel = metamodel
        self.prefix = prefix
        self.nodes = {}
        self.edges = {}
        self._counter = itertools.count(1)
        self._seq = {}
        self._out = defaultdict(list)
        self._in = defaultdict(list)

    def _next_id(self):
        while True:
            candidate = f"{self.prefix}{next(self._counter)}"
            if candidate not in self.nodes and candidate not in self.edges:
                return candidate

    def _register_id(self, element_id):
        if element_id in self.nodes or element_id in self.edges:
            raise GraphError("duplicate-id", f"id {element_id} already used")
        self._seq[element_id] = len(self._seq)

    def seq(self, element_id):
        """Allocation order of a node or edge id."""
        return self._seq[element_id]

    def _check_attr(self, type_name, attr, value):
        kind = self.metamodel.attribute_kind(type_name, attr)
        if kind is None:
            raise GraphError("undeclared-attribute", f"{type_name} declares no attribute {attr}")
        if not kind_matches(kind, value):
            raise GraphError("kind-mismatch", f"{type_name}.{attr} expects {kind}, got {value!r}")

    def add_node(self, type_name, attrs=None, node_id=None):
        node_type = self.metamodel.node_types.get(type_name)
        if node_type is None:
            raise GraphError("unknown-type", f"{type_name} is not declared in {self.metamodel.name}")
        if node_type.abstract:
            raise GraphError("abstract-type", f"{type_name} is abstract")
        attrs = dict(attrs or {})
        for attr, value in attrs.items():
            self._check_attr(type_name, attr, value)
        node_id = node_id or self._next_id()
        self._register_id(node_id)
        self.nodes[node_id] = Node(node_id, type_name, attrs)
        return node_id

    def set_attribute(self, node_id, attr, value):
        node = self.node(node_id)
        self._check_attr(node.type, attr, value)
        node.attrs[attr] = value

    def node(self, node_id):
        try:
            return self.nodes[node_id]
        except KeyError:
            raise GraphError("dangling-endpoint", f"no node {node_id}") from None

    def add_edge(self, type_name, source, target, position=None, edge_id=None):
        edge_type = self.metamodel.edge_types.get(type_name)
        if edge_type is None:
            raise GraphError("unknown-edge-type", f"{type_name} is not declared in {self.metamodel.name}")
        for end in (source, target):
            if end not in self.nodes:
                raise GraphError("dangling-endpoint", f"{type_name} endpoint {end} does not exist")
        if not self.metamodel.is_subtype(self.nodes[source].type, edge_type.source):
            raise GraphError("endpoint-type-mismatch", f"{type_name} source must be {edge_type.source}")
        if not self.metamodel.is_subtype(self.nodes[target].type, edge_type.target):
            raise GraphError("endpoint-type-mismatch", f"{type_name} target must be {edge_type.target}")
        if edge_type.ordered:
            if position is None:
                raise GraphError("ordinal-required", f"{type_name} is ordered")
            taken = {e.position for e in self.out_edges(source, type_name)}
            if position in taken:
                raise GraphError("duplicate-ordinal", f"{source} already has {type_name} #{position}")
            if position != len(taken):
                raise GraphError("gap-in-ordinals", f"{type_name} #{position} of {source} leaves a gap")
        elif position is not None:
            raise GraphError("ordinal-forbidden", f"{type_name} is not ordered")
        edge_id = edge_id or self._next_id()
        self._register_id(edge_id)
        self.edges[edge_id] = Edge(edge_id, type_name, source, target, position)
        self._out[source].append(edge_id)
        self._in[target].append(edge_id)
        return edge_id

    def remove_edge(self, edge_id):
        edge = self.edges.pop(edge_id)
        self._out[edge.source].remove(edge_id)
        self._in[edge.target].remove(edge_id)
        if edge.position is not None:
            for sibling in self.out_edges(edge.source, edge.type):
                if sibling.position > edge.position:
                    sibling.position -= 1

    def remove_node(self, node_id):
        if self._out[node_id] or self._in[node_id]:
            raise GraphError("dangling-node", f"{node_id} still has edges")
        del self.nodes[node_id]

    def out_edges(self, node_id, type_name=None):
        edges = [self.edges[e] for e in self._out.get(node_id, ())]
        if type_name is not None:
            edges = [e for e in edges if e.type == type_name]
        return sorted(edges, key=lambda e: (e.position is None, e.position, self._seq[e.id]))

    def in_edges(self, node_id, type_name=None):
        edges = [self.edges[e] for e in self._in.get(node_id, ())]
        if type_name is not None:
            edges = [e for e in edges if e.type == type_name]
        return sorted(edges, key=lambda e: self._seq[e.id])

    def children(self, node_id, type_name=None):
        return [e.target for e in self.out_edges(node_id, type_name)]

    def parent(self, node_id):
        for edge in self.in_edges(node_id):
            if self.metamodel.edge_types[edge.type].containment:
                return edge.source
        return None

    def nodes_of_type(self, type_name):
        return [n for n in self.nodes.values() if self.metamodel.is_subtype(n.type, type_name)]

    def preorder(self, root=None):
        """Node ids in containment preorder; roots and siblings in allocation order.

        With ``root`` only the subtree below it is walked.
        """
        edge_rank = {name: i for i, name in enumerate(self.metamodel.edge_types)}

        def contained(node_id):
            edges = [e for e in self.out_edges(node_id) if self.metamodel.edge_types[e.type].containment]
            edges.sort(key=lambda e: (edge_rank[e.type], -1 if e.position is None else e.position, self._seq[e.id]))
            return [e.target for e in edges]

        order = []
        seen = set()
        roots = [root] if root is not None else [n for n in self.nodes if self.parent(n) is None]
        stack = list(reversed(roots))
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                continue
            seen.add(node_id)
            order.append(node_id)
            stack.extend(reversed(contained(node_id)))
        return order

    def __len__(self):
        return len(self.nodes)


def conforms(graph):
    """Diagnostics for every type, attribute and ordinal violation in ``graph``."""
    metamodel = graph.metamodel
    problems = []
    for node in graph.nodes.values():
        node_type = metamodel.node_types.get(node.type)
        if node_type is None:
            problems.append(Diagnostic("unknown-type", f"type {node.type} is not declared", node.id))
            continue
        if node_type.abstract:
            problems.append(Diagnostic("abstract-type", f"type {node.type} is abstract", node.id))
        for attr, value in node.attrs.items():
            kind = metamodel.attribute_kind(node.type, attr)
            if kind is None:
                problems.append(Diagnostic("undeclared-attribute", f"{node.type} declares no {attr}", node.id))
            elif not kind_matches(kind, value):
                problems.append(Diagnostic("kind-mismatch", f"{attr} expects {kind}, got {value!r}", node.id))
    groups = defaultdict(list)
    for edge in graph.edges.values():
        edge_type = metamodel.edge_types.get(edge.type)
        if edge_type is None:
            problems.append(Diagnostic("unknown-edge-type", f"type {edge.type} is not declared", edge.id))
            continue
        ends = (edge.source, edge_type.source), (edge.target, edge_type.target)
        dangling = False
        for end, declared in ends:
            if end not in graph.nodes:
                problems.append(Diagnostic("dangling-endpoint", f"endpoint {end} does not exist", edge.id))
                dangling = True
            elif graph.nodes[end].type in metamodel.node_types and not metamodel.is_subtype(graph.nodes[end].type, declared):
                problems.append(Diagnostic("endpoint-type-mismatch", f"{end} is not a {declared}", edge.id))
        if dangling:
            continue
        if edge_type.ordered:
            if edge.position is None:
                problems.append(Diagnostic("ordinal-required", f"{edge.type} is ordered", edge.id))
            else:
                groups[(edge.source, edge.type)].append(edge)
        elif edge.position is not None:
            problems.append(Diagnostic("ordinal-forbidden", f"{edge.type} is not ordered", edge.id))
    for (source, type_name), edges in groups.items():
        positions = sorted(e.position for e in edges)
        if len(set(positions)) != len(positions):
            problems.append(Diagnostic("duplicate-ordinal", f"{type_name} ordinals repeat", source))
        elif positions != list(range(len(positions))):
            problems.append(Diagnostic("gap-in-ordinals", f"{type_name} ordinals are {positions}", source))
    return problems


@dataclass
class CorrLink:
    id: str
    type: str
    source_node: str
    target_node: str


class TripleModel:
    """Source graph, target graph and the correspondence links between them."""

    def __init__(self, source, target, corr_metamodel):
        self.source = source
        self.target = target
        self.corr_metamodel = corr_metamodel
        self.corrs = {}
        self._counter = itertools.count(1)
        self._seq = {}

    def add_corr(self, type_name, src, tgt, corr_id=None):
        corr_type = self.corr_metamodel.edge_types.get(type_name)
        if corr_type is None or corr_type.abstract:
            raise GraphError("unknown-corr-type", f"{type_name} is not a concrete corr type")
        if src not in self.source.nodes or tgt not in self.target.nodes:
            raise GraphError("dangling-endpoint", f"{type_name} endpoints {src}/{tgt} do not resolve")
        if not self.source.metamodel.is_subtype(self.source.nodes[src].type, corr_type.source):
            raise GraphError("endpoint-mismatch", f"{src} is not a {corr_type.source}")
        if not self.target.metamodel.is_subtype(self.target.nodes[tgt].type, corr_type.target):
            raise GraphError("endpoint-mismatch", f"{tgt} is not a {corr_type.target}")
        if corr_id is None:
            corr_id = f"c{next(self._counter)}"
            while corr_id in self.corrs:
                corr_id = f"c{next(self._counter)}"
        elif corr_id in self.corrs:
            raise GraphError("duplicate-id", f"id {corr_id} already used")
        self._seq[corr_id] = len(self._seq)
        self.corrs[corr_id] = CorrLink(corr_id, type_name, src, tgt)
        return corr_id

    def remove_corr(self, corr_id):
        del self.corrs[corr_id]

    def seq(self, corr_id):
        return self._seq[corr_id]

    def corrs_of(self, node_id, domain="source", type_name=None):
        """Links touching ``node_id`` in ``domain``, optionally filtered by (super)type."""
        attr = "source_node" if domain == "source" else "target_node"
        found = [c for c in self.corrs.values() if getattr(c, attr) == node_id]
        if type_name is not None:
            found = [c for c in found if self.corr_metamodel.is_edge_subtype(c.type, type_name)]
        return found

    def corr_of(self, node_id, domain="source", type_name=None):
        found = self.corrs_of(node_id, domain, type_name)
        if not found:
            return None
        return found[0].target_node if domain == "source" else found[0].source_node

    def remove_node(self, domain, node_id):
        if self.corrs_of(node_id, domain):
            raise GraphError("dangling-node", f"{node_id} still has corr links")
        self.graph(domain).remove_node(node_id)

    def graph(self, domain):
        return self.source if domain == "source" else self.target

    def conforms(self):
        problems = [Diagnostic(p.code, p.message, f"source:{p.location}") for p in conforms(self.source)]
        problems += [Diagnostic(p.code, p.message, f"target:{p.location}") for p in conforms(self.target)]
        for corr in self.corrs.values():
            corr_type = self.corr_metamodel.edge_types.get(corr.type)
            if corr_type is None:
                problems.append(Diagnostic("unknown-corr-type", f"{corr.type} is not declared", corr.id))
                continue
            for graph, end, declared in (
                (self.source, corr.source_node, corr_type.source),
                (self.target, corr.target_node, corr_type.target),
            ):
                if end not in graph.nodes:
                    problems.append(Diagnostic("dangling-endpoint", f"{end} does not resolve", corr.id))
                elif not graph.metamodel.is_subtype(graph.nodes[end].type, declared):
                    problems.append(Diagnostic("endpoint-mismatch", f"{end} is not a {declared}", corr.id))
        return problems


# --- JSON ---------------------------------------------------------------------

def graph_to_dict(graph):
    nodes = [
        {"id": n.id, "type": n.type, "attrs": {k: n.attrs[k] for k in sorted(n.attrs)}}
        for n in sorted(graph.nodes.values(), key=lambda n: graph.seq(n.id))
    ]
    edges = []
    for e in sorted(graph.edges.values(), key=lambda e: graph.seq(e.id)):
        item = {"id": e.id, "type": e.type, "src": e.source, "tgt": e.target}
        if e.position is not None:
            item["pos"] = e.position
        edges.append(item)
    return {"metamodel": graph.metamodel.name, "nodes": nodes, "edges": edges}


def graph_from_dict(data, metamodels, prefix="n"):
    try:
        metamodel = metamodels[data["metamodel"]]
    except KeyError:
        raise GraphError("unknown-metamodel", f"metamodel {data.get('metamodel')!r} is not known") from None
    graph = Graph(metamodel, prefix)
    for item in data.get("nodes", []):
        graph.add_node(item["type"], item.get("attrs", {}), node_id=str(item["id"]))
    # ordinals must arrive in increasing order per group
    edges = sorted(data.get("edges", []), key=lambda item: item.get("pos", -1))
    for item in edges:
        graph.add_edge(item["type"], str(item["src"]), str(item["tgt"]), item.get("pos"), edge_id=str(item["id"]))
    return graph


def triple_to_dict(triple):
    corrs = [
        {"id": c.id, "type": c.type, "src": c.source_node, "tgt": c.target_node}
        for c in sorted(triple.corrs.values(), key=lambda c: triple.seq(c.id))
    ]
    return {
        "corr_metamodel": triple.corr_metamodel.name,
        "source": graph_to_dict(triple.source),
        "target": graph_to_dict(triple.target),
        "corrs": corrs,
    }


def triple_from_dict(data, metamodels):
    source = graph_from_dict(data["source"], metamodels, prefix="s")
    target = graph_from_dict(data["target"], metamodels, prefix="t")
    try:
        corr_metamodel = metamodels[data["corr_metamodel"]]
    except KeyError:
        raise GraphError("unknown-metamodel", f"metamodel {data.get('corr_metamodel')!r} is not known") from None
    triple = TripleModel(source, target, corr_metamodel)
    for item in data.get("corrs", []):
        triple.add_corr(item["type"], str(item["src"]), str(item["tgt"]), corr_id=str(item["id"]))
    return triple


def dumps(data):
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


# --- comparison up to ids -------------------------------------------------------

def to_networkx(graph, tag=""):
    result = nx.MultiDiGraph()
    for node in graph.nodes.values():
        result.add_node(tag + node.id, type=node.type, attrs=tuple(sorted(node.attrs.items())))
    for edge in graph.edges.values():
        pos = -1 if edge.position is None else edge.position
        result.add_edge(tag + edge.source, tag + edge.target, type=edge.type, pos=pos)
    return result


def _triple_to_networkx(triple):
    result = nx.compose(to_networkx(triple.source, "s:"), to_networkx(triple.target, "t:"))
    for corr in triple.corrs.values():
        result.add_edge("s:" + corr.source_node, "t:" + corr.target_node, type="corr:" + corr.type, pos=-1)
    return result


def _node_match(a, b):
    return a["type"] == b["type"] and a["attrs"] == b["attrs"]


def _edge_match(a, b):
    def labels(edges):
        return sorted((d["type"], d["pos"]) for d in edges.values())

    return labels(a) == labels(b)


def isomorphic(a, b):
    """True iff two graphs or two triples are equal up to element ids."""
    if isinstance(a, TripleModel):
        ga, gb = _triple_to_networkx(a), _triple_to_networkx(b)
    else:
        ga, gb = to_networkx(a), to_networkx(b)
    matcher = isomorphism.MultiDiGraphMatcher(ga, gb, node_match=_node_match, edge_match=_edge_match)
    return matcher.is_isomorphic()

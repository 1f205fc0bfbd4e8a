"""Operationalized TGG rules and the control algorithm.

A rule is compiled once per direction: created elements of the input
domain become match-and-mark obligations, everything created in the output
domain (and the corr links) is built on application. The control algorithm
walks unmarked input nodes in containment preorder and applies the first
rule, in declaration order, that matches at that node.
"""
import logging
import random
from dataclasses import dataclass, field
from enum import Enum

from tggengine.utils.csp import default_registry, solve_csp, sort_csp
from tggengine.utils.exceptions import (
    CspFailure,
    CspUnsortable,
    Diagnostic,
    GraphError,
    PostConditionFailure,
    PostProcessorViolation,
    RegistryError,
    ResolverFailure,
    RuleSetError,
    TransformationStuck,
)
from tggengine.utils.graph import Graph, TripleModel
from tggengine.utils.rules import CORR, SOURCE, TARGET, assignment_variable

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    CHECK = "check"
    LINK = "link"

    @property
    def input_domains(self):
        return {
            Direction.FORWARD: (SOURCE,),
            Direction.BACKWARD: (TARGET,),
        }.get(self, (SOURCE, TARGET))

    def __str__(self):
        return self.value


# Element roles after operationalization.
MATCH = "match"    # input context: must exist and be marked
MARK = "mark"      # input created: must exist unmarked, gets marked
EXISTS = "exists"  # output context: must exist
CREATE = "create"  # built by the application


class Registries:
    """Named resolvers, post-processors and the constraint registry."""

    def __init__(self, constraints=None):
        self.resolvers = {}
        self.post_processors = {}
        self.constraints = constraints or default_registry()

    def register_resolver(self, name, resolver):
        if name in self.resolvers:
            raise RegistryError(f"resolver {name} is already registered")
        self.resolvers[name] = resolver

    def register_post_processor(self, name, hook):
        if name in self.post_processors:
            raise RegistryError(f"post-processor {name} is already registered")
        self.post_processors[name] = hook

    def resolver(self, name):
        try:
            return self.resolvers[name]
        except KeyError:
            raise RegistryError(f"resolver {name} is not registered") from None

    def post_processor(self, name):
        try:
            return self.post_processors[name]
        except KeyError:
            raise RegistryError(f"post-processor {name} is not registered") from None


def register_resolver(name, resolver, registries):
    registries.register_resolver(name, resolver)


def register_post_processor(name, hook, registries):
    registries.register_post_processor(name, hook)


class Marks:
    """Input elements already translated, keyed by (domain, id)."""

    def __init__(self):
        self._marked = set()

    def add(self, domain, element_id):
        if (domain, element_id) in self._marked:
            raise GraphError("double-mark", f"{domain} element {element_id} is translated twice")
        self._marked.add((domain, element_id))

    def __contains__(self, key):
        return key in self._marked

    def __len__(self):
        return len(self._marked)


@dataclass(frozen=True)
class OperationalRule:
    rule: object
    direction: Direction
    roles: dict
    plan: object
    anchor: str = None
    active_bindings: tuple = ()
    asserted_bindings: tuple = ()
    skipped_bindings: tuple = ()
    asserts_post_processor: bool = False

    @property
    def name(self):
        return self.rule.name

    @property
    def anchor_domain(self):
        return self.rule.element(self.anchor).domain if self.anchor else None

    def role(self, element_id):
        return self.roles[element_id]


def operationalize(rule, direction, constraints=None):
    """Compile ``rule`` for ``direction``."""
    direction = Direction(direction)
    constraints = constraints or default_registry()
    inputs = direction.input_domains
    roles = {}
    for element in rule.elements:
        if element.domain == CORR:
            if element.created:
                roles[element.id] = MARK if direction is Direction.CHECK else CREATE
            else:
                roles[element.id] = MATCH if direction is Direction.CHECK else EXISTS
        elif element.domain in inputs:
            roles[element.id] = MARK if element.created else MATCH
        else:
            roles[element.id] = CREATE if element.created else EXISTS
    for edge in rule.edges:
        if edge.domain in inputs:
            roles[edge.id] = MARK if edge.created else MATCH
        else:
            roles[edge.id] = CREATE if edge.created else EXISTS

    bound = {var for var, slots in rule.housing().items() if any(roles[owner] != CREATE for owner, _ in slots)}
    try:
        plan = sort_csp(rule.effective_csp(), bound, constraints)
    except CspUnsortable as exc:
        problem = Diagnostic("csp-unsortable", str(exc), f"{rule.name}:{direction}")
        raise RuleSetError(f"{rule.name} cannot run {direction}: {exc}", diagnostics=[problem]) from exc

    anchor = next((e.id for e in rule.elements if e.domain != CORR and roles[e.id] == MARK), None)
    active, asserted, skipped = [], [], []
    for binding in rule.bindings:
        if rule.element(binding.from_element).domain not in inputs:
            skipped.append(binding)
        elif direction is Direction.CHECK:
            asserted.append(binding)
        else:
            active.append(binding)
    # Check and link verify what the post-processor would have written.
    asserts = bool(rule.post_processor) and direction in (Direction.CHECK, Direction.LINK)
    return OperationalRule(
        rule, direction, roles, plan, anchor, tuple(active), tuple(asserted), tuple(skipped), asserts
    )


@dataclass
class Match:
    rule: str
    nodes: dict
    edges: dict
    values: dict
    anchor: str = None
    created: dict = field(default_factory=dict)
    links: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _State:
    nodes: dict
    edges: dict
    values: dict
    used: frozenset

    def bind(self, element_id, domain, model_id, values=None):
        nodes = dict(self.nodes)
        nodes[element_id] = model_id
        return _State(nodes, self.edges, self.values if values is None else values, self.used | {(domain, model_id)})

    def bind_edge(self, edge_id, domain, model_id, values):
        edges = dict(self.edges)
        edges[edge_id] = model_id
        return _State(self.nodes, edges, values, self.used | {(domain + ":edge", model_id)})


class _Matcher:
    def __init__(self, op_rule, triple, marks, registries):
        self.op_rule = op_rule
        self.rule = op_rule.rule
        self.triple = triple
        self.marks = marks
        self.registries = registries
        existing = [e for e in self.rule.elements if op_rule.role(e.id) != CREATE]
        self.existing_nodes = [e for e in existing if e.domain != CORR]
        self.existing_corrs = [e for e in existing if e.domain == CORR]
        self.existing_edges = [e for e in self.rule.edges if op_rule.role(e.id) != CREATE]

    def _role_allows(self, role, key):
        if role == MATCH:
            return key in self.marks
        if role == MARK:
            return key not in self.marks
        return True

    def _harvest(self, element, attrs, values):
        slots = list(element.variables.items())
        slots += [(attr, assignment_variable(element.id, attr)) for attr in element.assignments]
        if not slots:
            return values
        values = dict(values)
        for attr, var in slots:
            if attr not in attrs:
                return None
            if var in values and values[var] != attrs[attr]:
                return None
            values[var] = attrs[attr]
        return values

    def accept_node(self, element, node_id, state):
        graph = self.triple.graph(element.domain)
        node = graph.nodes.get(node_id)
        if node is None or (element.domain, node_id) in state.used:
            return None
        if not graph.metamodel.is_subtype(node.type, element.type):
            return None
        if not self._role_allows(self.op_rule.role(element.id), (element.domain, node_id)):
            return None
        values = self._harvest(element, node.attrs, state.values)
        if values is None:
            return None
        return state.bind(element.id, element.domain, node_id, values)

    def accept_corr(self, element, corr, state):
        if (CORR, corr.id) in state.used:
            return None
        if not self.triple.corr_metamodel.is_edge_subtype(corr.type, element.type):
            return None
        if not self._role_allows(self.op_rule.role(element.id), (CORR, corr.id)):
            return None
        state = state.bind(element.id, CORR, corr.id)
        for end_id, domain, model_id in ((element.source, SOURCE, corr.source_node), (element.target, TARGET, corr.target_node)):
            if end_id in state.nodes:
                if state.nodes[end_id] != model_id:
                    return None
                continue
            state = self.accept_node(self.rule.element(end_id), model_id, state)
            if state is None:
                return None
        return state

    def accept_edge(self, rule_edge, edge, state):
        if (rule_edge.domain + ":edge", edge.id) in state.used:
            return None
        if not self._role_allows(self.op_rule.role(rule_edge.id), (rule_edge.domain, edge.id)):
            return None
        values = state.values
        var = rule_edge.position_var
        if var is not None:
            if var in values and values[var] != edge.position:
                return None
            values = dict(values)
            values[var] = edge.position
        elif rule_edge.position is not None and rule_edge.position != edge.position:
            return None
        return state.bind_edge(rule_edge.id, rule_edge.domain, edge.id, values)

    def resolve(self, binding, node_id):
        resolver = self.registries.resolver(binding.resolver)
        try:
            return resolver(node_id, self.triple)
        except ResolverFailure as exc:
            logger.debug("%s: resolver %s failed at %s: %s", self.rule.name, binding.resolver, node_id, exc)
            return None

    def next_step(self, state):
        for edge in self.existing_edges:
            if edge.id not in state.edges and (edge.source in state.nodes or edge.target in state.nodes):
                return "edge", edge
        for element in self.existing_corrs:
            if element.id not in state.nodes and (element.source in state.nodes or element.target in state.nodes):
                return "corr", element
        for binding in self.op_rule.active_bindings:
            if binding.from_element in state.nodes and binding.to_element not in state.nodes:
                return "binding", binding
        for element in self.existing_nodes:
            if element.id not in state.nodes:
                return "scan", element
        for element in self.existing_corrs:
            if element.id not in state.nodes:
                return "scan-corr", element
        return None, None

    def expand(self, kind, item, state):
        if kind == "edge":
            graph = self.triple.graph(item.domain)
            is_edge = graph.metamodel.is_edge_subtype
            if item.source in state.nodes:
                candidates = [e for e in graph.out_edges(state.nodes[item.source]) if is_edge(e.type, item.type)]
                if item.target in state.nodes:
                    candidates = [e for e in candidates if e.target == state.nodes[item.target]]
            else:
                candidates = [e for e in graph.in_edges(state.nodes[item.target]) if is_edge(e.type, item.type)]
            for edge in candidates:
                extended = self.accept_edge(item, edge, state)
                if extended is None:
                    continue
                for end_id, model_id in ((item.source, edge.source), (item.target, edge.target)):
                    if extended is not None and end_id not in extended.nodes:
                        extended = self.accept_node(self.rule.element(end_id), model_id, extended)
                if extended is not None:
                    yield extended
        elif kind == "corr":
            if item.source in state.nodes:
                candidates = self.triple.corrs_of(state.nodes[item.source], SOURCE, item.type)
            else:
                candidates = self.triple.corrs_of(state.nodes[item.target], TARGET, item.type)
            for corr in sorted(candidates, key=lambda c: self.triple.seq(c.id)):
                extended = self.accept_corr(item, corr, state)
                if extended is not None:
                    yield extended
        elif kind == "binding":
            resolved = self.resolve(item, state.nodes[item.from_element])
            if resolved is not None:
                extended = self.accept_node(self.rule.element(item.to_element), resolved, state)
                if extended is not None:
                    yield extended
        elif kind == "scan":
            graph = self.triple.graph(item.domain)
            for node_id in sorted(graph.nodes, key=graph.seq):
                extended = self.accept_node(item, node_id, state)
                if extended is not None:
                    yield extended
        elif kind == "scan-corr":
            for corr in sorted(self.triple.corrs.values(), key=lambda c: self.triple.seq(c.id)):
                extended = self.accept_corr(item, corr, state)
                if extended is not None:
                    yield extended

    def complete(self, state):
        for binding in self.op_rule.active_bindings + self.op_rule.asserted_bindings:
            if self.resolve(binding, state.nodes[binding.from_element]) != state.nodes[binding.to_element]:
                return None
        try:
            values = solve_csp(self.op_rule.plan, state.values, self.registries.constraints)
        except (CspFailure, CspUnsortable) as exc:
            logger.debug("%s %s: attribute constraints rejected a match: %s", self.rule.name, self.op_rule.direction, exc)
            return None
        anchor = state.nodes.get(self.op_rule.anchor) if self.op_rule.anchor else None
        links = {
            state.nodes[e.source]: state.nodes[e.target]
            for e in self.rule.elements
            if e.domain == CORR and e.source in state.nodes and e.target in state.nodes
        }
        match = Match(self.rule.name, dict(state.nodes), dict(state.edges), values, anchor, links=links)
        if self.op_rule.asserts_post_processor:
            hook = self.registries.post_processor(self.rule.post_processor)
            try:
                hook(match, self.triple, self.op_rule.direction)
            except PostConditionFailure as exc:
                logger.debug("%s %s: %s rejected a match: %s", self.rule.name, self.op_rule.direction, self.rule.post_processor, exc)
                return None
        return match

    def search(self, state):
        kind, item = self.next_step(state)
        if kind is None:
            match = self.complete(state)
            if match is not None:
                yield match
            return
        for extended in self.expand(kind, item, state):
            yield from self.search(extended)

    def matches(self, anchor=None):
        empty = _State({}, {}, {}, frozenset())
        if self.op_rule.anchor is None:
            yield from self.search(empty)
            return
        element = self.rule.element(self.op_rule.anchor)
        graph = self.triple.graph(element.domain)
        candidates = [anchor] if anchor is not None else sorted(graph.nodes, key=graph.seq)
        for node_id in candidates:
            state = self.accept_node(element, node_id, empty)
            if state is not None:
                yield from self.search(state)


def iter_matches(op_rule, triple, marks, registries, anchor=None):
    return _Matcher(op_rule, triple, marks, registries).matches(anchor)


def find_matches(op_rule, triple, marks, registries, anchor=None):
    """Every match of ``op_rule``, ordered by anchor node allocation order."""
    return list(iter_matches(op_rule, triple, marks, registries, anchor))


class OrderedEdgeStager:
    """Holds back ordered edges until every lower ordinal of their group exists."""

    def __init__(self):
        self._pending = {}

    def add(self, graph, type_name, source, target, position):
        if position is None:
            return [graph.add_edge(type_name, source, target)]
        key = (id(graph), source, type_name)
        graph_, pending = self._pending.setdefault(key, (graph, {}))
        if position in pending or position < len(graph.out_edges(source, type_name)):
            raise GraphError("duplicate-ordinal", f"{source} already has {type_name} #{position}")
        pending[position] = target
        committed = []
        while len(graph.out_edges(source, type_name)) in pending:
            ordinal = len(graph.out_edges(source, type_name))
            committed.append(graph.add_edge(type_name, source, pending.pop(ordinal), ordinal))
        if not pending:
            del self._pending[key]
        return committed

    def leftovers(self):
        return [
            f"{type_name} #{position} of {source}"
            for (_, source, type_name), (_, pending) in self._pending.items()
            for position in sorted(pending)
        ]


@dataclass(frozen=True)
class ApplicationRecord:
    rule: str
    direction: Direction
    anchor: str
    created: tuple = ()

    def trace_line(self):
        return f"{self.rule} {self.direction} anchor={self.anchor} created={','.join(self.created)}"


def _snapshot(triple):
    return {
        (domain, node.id): dict(node.attrs)
        for domain in (SOURCE, TARGET)
        for node in triple.graph(domain).nodes.values()
    }


def apply_rule(op_rule, match, triple, marks, registries, stager=None):
    """Build the output of ``match`` and mark its input elements.

    Raises :class:`CspFailure` for a stale match, before anything changes.
    """
    rule = op_rule.rule
    stager = stager or OrderedEdgeStager()
    initial = {var: match.values[var] for var in op_rule.plan.initially_bound}
    values = solve_csp(op_rule.plan, initial, registries.constraints)

    mapping = dict(match.nodes)
    created = []
    for element in rule.elements:
        if op_rule.role(element.id) != CREATE or element.domain == CORR:
            continue
        attrs = {attr: values[var] for attr, var in element.variables.items()}
        attrs.update({attr: values[assignment_variable(element.id, attr)] for attr in element.assignments})
        mapping[element.id] = triple.graph(element.domain).add_node(element.type, attrs)
        created.append(mapping[element.id])
    for edge in rule.edges:
        if op_rule.role(edge.id) != CREATE:
            continue
        position = values[edge.position_var] if edge.position_var else edge.position
        stager.add(triple.graph(edge.domain), edge.type, mapping[edge.source], mapping[edge.target], position)
    for element in rule.elements:
        if element.domain == CORR and op_rule.role(element.id) == CREATE:
            mapping[element.id] = triple.add_corr(element.type, mapping[element.source], mapping[element.target])
            created.append(mapping[element.id])

    for element in rule.elements:
        if op_rule.role(element.id) == MARK:
            marks.add(element.domain, mapping[element.id])
    for edge in rule.edges:
        if op_rule.role(edge.id) == MARK:
            marks.add(edge.domain, match.edges[edge.id])

    applied = Match(rule.name, mapping, dict(match.edges), values, match.anchor, {e: mapping[e] for e in mapping if e not in match.nodes})
    if rule.post_processor and not op_rule.asserts_post_processor:
        hook = registries.post_processor(rule.post_processor)
        before = _snapshot(triple)
        edge_count = len(triple.source.edges) + len(triple.target.edges)
        hook(applied, triple, op_rule.direction)
        after = _snapshot(triple)
        fresh = {node_id for node_id in created}
        changed = [key for key in before if key[1] not in fresh and after.get(key) != before[key]]
        if changed or set(after) != set(before) or edge_count != len(triple.source.edges) + len(triple.target.edges):
            raise PostProcessorViolation(f"{rule.post_processor} touched elements it did not create: {changed}")

    record = ApplicationRecord(rule.name, op_rule.direction, match.anchor, tuple(created))
    logger.info(record.trace_line())
    return record


@dataclass
class TransformationResult:
    triple: TripleModel
    trace: list = field(default_factory=list)

    def trace_lines(self):
        return [record.trace_line() for record in self.trace]


@dataclass
class CheckReport:
    consistent: bool
    unmarked: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def verdict(self):
        return "accept" if self.consistent else "reject"


class TransformationEngine:
    """A rule set compiled for every direction, plus its registries.

    ``seed`` shuffles the order in which unmarked input nodes are tried.
    """

    def __init__(self, ruleset, registries, seed=None):
        self.ruleset = ruleset
        self.registries = registries
        self.seed = seed
        for rule in ruleset:
            for binding in rule.bindings:
                registries.resolver(binding.resolver)
            if rule.post_processor:
                registries.post_processor(rule.post_processor)
        self.operational = {
            direction: [operationalize(rule, direction, registries.constraints) for rule in ruleset]
            for direction in Direction
        }

    def _unmarked(self, triple, marks, direction):
        missing = []
        for domain in direction.input_domains:
            graph = triple.graph(domain)
            missing += [f"{domain} node {n} ({graph.nodes[n].type})" for n in graph.preorder() if (domain, n) not in marks]
            missing += [
                f"{domain} edge {e.id} ({e.type} {e.source}->{e.target})"
                for e in sorted(graph.edges.values(), key=lambda e: graph.seq(e.id))
                if (domain, e.id) not in marks
            ]
        if direction is Direction.CHECK:
            missing += [f"corr {c.id} ({c.type})" for c in triple.corrs.values() if (CORR, c.id) not in marks]
        return missing

    def _run(self, triple, direction):
        marks = Marks()
        stager = OrderedEdgeStager()
        trace = []
        rules = self.operational[direction]
        axiom = next(r for r in rules if r.rule.is_axiom)
        rng = random.Random(self.seed) if self.seed is not None else None
        while True:
            pending = [
                (domain, node_id)
                for domain in direction.input_domains
                for node_id in triple.graph(domain).preorder()
                if (domain, node_id) not in marks
            ]
            if not pending:
                break
            if rng is not None:
                rng.shuffle(pending)
            candidates = [axiom] if not trace else [r for r in rules if r is not axiom]
            record = self._step(triple, marks, stager, pending, candidates)
            if record is None:
                break
            trace.append(record)
        if not trace:
            return marks, trace, ["axiom unmatched"] + self._unmarked(triple, marks, direction)
        problems = self._unmarked(triple, marks, direction)
        problems += [f"uncommitted ordered edge {item}" for item in stager.leftovers()]
        return marks, trace, problems

    def _step(self, triple, marks, stager, pending, rules):
        for domain, node_id in pending:
            node_type = triple.graph(domain).nodes[node_id].type
            for op_rule in rules:
                if op_rule.anchor_domain != domain:
                    continue
                metamodel = triple.graph(domain).metamodel
                if not metamodel.is_subtype(node_type, op_rule.rule.element(op_rule.anchor).type):
                    continue
                match = next(iter_matches(op_rule, triple, marks, self.registries, anchor=node_id), None)
                if match is None:
                    continue
                try:
                    return apply_rule(op_rule, match, triple, marks, self.registries, stager)
                except CspFailure as exc:
                    logger.debug("stale match of %s at %s: %s", op_rule.name, node_id, exc)
        return None

    def forward(self, source):
        target = Graph(self.ruleset.schema.target_mm, prefix="t")
        triple = TripleModel(source, target, self.ruleset.schema.corr_mm)
        _, trace, problems = self._run(triple, Direction.FORWARD)
        if problems:
            raise TransformationStuck(f"forward transformation is stuck: {'; '.join(problems[:10])}", problems)
        return TransformationResult(triple, trace)

    def backward(self, target):
        source = Graph(self.ruleset.schema.source_mm, prefix="s")
        triple = TripleModel(source, target, self.ruleset.schema.corr_mm)
        _, trace, problems = self._run(triple, Direction.BACKWARD)
        if problems:
            raise TransformationStuck(f"backward transformation is stuck: {'; '.join(problems[:10])}", problems)
        return TransformationResult(triple, trace)

    def check(self, triple):
        _, trace, problems = self._run(triple, Direction.CHECK)
        return CheckReport(not problems, problems, trace)

    def link(self, source, target):
        triple = TripleModel(source, target, self.ruleset.schema.corr_mm)
        _, trace, problems = self._run(triple, Direction.LINK)
        if problems:
            raise TransformationStuck(f"link creation is stuck: {'; '.join(problems[:10])}", problems)
        return TransformationResult(triple, trace)


def forward_transform(source, ruleset, registries):
    return TransformationEngine(ruleset, registries).forward(source).triple


def backward_transform(target, ruleset, registries):
    return TransformationEngine(ruleset, registries).backward(target).triple


def check_consistency(triple, ruleset, registries):
    return TransformationEngine(ruleset, registries).check(triple)


def create_links(source, target, ruleset, registries):
    return TransformationEngine(ruleset, registries).link(source, target).triple

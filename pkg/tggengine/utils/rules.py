"""TGG rules: JSON loading, serialization and static validation.

Rule set documents look like::

    {"schema": {"source": "...", "corr": "...", "target": "..."},
     "rules": [{"name": "...", "elements": [...], "edges": [...],
                "temps": ["$t1"], "csp": [{"constraint": "...", "args": [...]}],
                "bindings": [{"from": "...", "to": "...", "resolver": "..."}],
                "post": "..."}]}

String arguments starting with ``$`` are CSP variables; ``$$`` escapes a
literal dollar.
"""
import json
from dataclasses import dataclass, field

from tggengine.utils.csp import EQ, ConstraintInstance, Var, default_registry
from tggengine.utils.exceptions import ConstraintRegistryError, Diagnostic, RuleSetError
from tggengine.utils.graph import kind_matches

SOURCE = "source"
CORR = "corr"
TARGET = "target"
DOMAINS = (SOURCE, CORR, TARGET)

CONTEXT = "context"
CREATE = "create"
MODIFIERS = (CONTEXT, CREATE)


@dataclass(frozen=True)
class TggSchema:
    source_mm: object
    corr_mm: object
    target_mm: object

    def metamodel(self, domain):
        return {SOURCE: self.source_mm, CORR: self.corr_mm, TARGET: self.target_mm}[domain]

    def validate(self):
        problems = []
        for corr_type in self.corr_mm.edge_types.values():
            if corr_type.source not in self.source_mm.node_types:
                problems.append(Diagnostic("bad-corr-type", f"source end {corr_type.source} is not a source type", corr_type.name))
            if corr_type.target not in self.target_mm.node_types:
                problems.append(Diagnostic("bad-corr-type", f"target end {corr_type.target} is not a target type", corr_type.name))
        return problems


@dataclass(frozen=True)
class RuleElement:
    id: str
    domain: str
    type: str
    modifier: str = CREATE
    assignments: dict = field(default_factory=dict)
    variables: dict = field(default_factory=dict)
    source: str = None
    target: str = None

    @property
    def created(self):
        return self.modifier == CREATE


@dataclass(frozen=True)
class RuleEdge:
    id: str
    domain: str
    type: str
    source: str
    target: str
    modifier: str = CREATE
    position: object = None

    @property
    def created(self):
        return self.modifier == CREATE

    @property
    def position_var(self):
        return self.position.name if isinstance(self.position, Var) else None


@dataclass(frozen=True)
class BindingExpr:
    from_element: str
    to_element: str
    resolver: str


@dataclass(frozen=True)
class TggRule:
    name: str
    elements: tuple = ()
    edges: tuple = ()
    csp: tuple = ()
    bindings: tuple = ()
    temps: tuple = ()
    post_processor: str = None

    @property
    def is_axiom(self):
        return all(e.created for e in self.elements) and all(e.created for e in self.edges)

    def element(self, element_id):
        return next((e for e in self.elements if e.id == element_id), None)

    def housing(self):
        """Variable name -> list of (element id, attribute) slots that hold it.

        Edge position variables are housed as ``(edge id, None)``.
        """
        housed = {}
        for element in self.elements:
            for attr, var in element.variables.items():
                housed.setdefault(var, []).append((element.id, attr))
            for attr in element.assignments:
                housed.setdefault(assignment_variable(element.id, attr), []).append((element.id, attr))
        for edge in self.edges:
            if edge.position_var:
                housed.setdefault(edge.position_var, []).append((edge.id, None))
        return housed

    def effective_csp(self):
        """Declared constraints followed by one ``eq`` per attribute assignment."""
        assignments = [
            ConstraintInstance(EQ.name, (Var(assignment_variable(element.id, attr)), value))
            for element in self.elements
            for attr, value in element.assignments.items()
        ]
        return tuple(self.csp) + tuple(assignments)


@dataclass(frozen=True)
class RuleSet:
    schema: TggSchema
    rules: tuple

    @property
    def axiom(self):
        return next(r for r in self.rules if r.is_axiom)

    def rule(self, name):
        return next((r for r in self.rules if r.name == name), None)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)


def assignment_variable(element_id, attr):
    return f"{element_id}.{attr}"


def _compatible(metamodel, a, b):
    return metamodel.is_subtype(a, b) or metamodel.is_subtype(b, a)


def validate_rule(rule, schema, constraints=None):
    """Diagnostics for every structural problem of ``rule`` against ``schema``."""
    constraints = constraints or default_registry()
    problems = []

    def report(code, message, where=""):
        problems.append(Diagnostic(code, message, f"{rule.name}:{where}" if where else rule.name))

    elements = {}
    for element in rule.elements:
        if element.id in elements:
            report("duplicate-element", "element id is used twice", element.id)
            continue
        elements[element.id] = element
        if element.domain not in DOMAINS:
            report("unknown-domain", f"domain {element.domain!r}", element.id)
            continue
        if element.modifier not in MODIFIERS:
            report("unknown-modifier", f"modifier {element.modifier!r}", element.id)
        metamodel = schema.metamodel(element.domain)
        registry = metamodel.edge_types if element.domain == CORR else metamodel.node_types
        type_ = registry.get(element.type)
        if type_ is None:
            report("unknown-type", f"{element.type} is not declared in {metamodel.name}", element.id)
            continue
        if type_.abstract and element.created:
            report("abstract-created", f"{element.type} is abstract and cannot be created", element.id)
        if element.domain == CORR:
            if element.assignments or element.variables:
                report("undeclared-attribute", "corr elements carry no attributes", element.id)
            continue
        for attr, value in element.assignments.items():
            kind = metamodel.attribute_kind(element.type, attr)
            if kind is None:
                report("undeclared-attribute", f"{element.type} has no {attr}", element.id)
            elif not kind_matches(kind, value):
                report("kind-mismatch", f"{attr} expects {kind}, got {value!r}", element.id)
            if attr in element.variables:
                report("assigned-and-bound", f"{attr} is both assigned and variable-bound", element.id)
        for attr in element.variables:
            if attr not in element.assignments and metamodel.attribute_kind(element.type, attr) is None:
                report("undeclared-attribute", f"{element.type} has no {attr}", element.id)

    for element in elements.values():
        if element.domain != CORR or element.type not in schema.corr_mm.edge_types:
            continue
        corr_type = schema.corr_mm.edge_types[element.type]
        ends = ((element.source, SOURCE, corr_type.source), (element.target, TARGET, corr_type.target))
        for end, domain, declared in ends:
            other = elements.get(end)
            if other is None or other.domain != domain:
                report("bad-corr", f"{end!r} is not a {domain} element of the rule", element.id)
            elif other.type in schema.metamodel(domain).node_types and not _compatible(schema.metamodel(domain), other.type, declared):
                report("endpoint-type-mismatch", f"{end} cannot be a {declared}", element.id)
            elif element.created is False and other.created:
                report("created-endpoint", f"context corr touches created {end}", element.id)

    seen_edges = set()
    creates_elements = any(e.created for e in elements.values())
    for edge in rule.edges:
        if edge.id in seen_edges:
            report("duplicate-element", "edge id is used twice", edge.id)
        seen_edges.add(edge.id)
        ends = [elements.get(edge.source), elements.get(edge.target)]
        if None in ends:
            report("dangling-rule-edge", f"endpoint {edge.source if ends[0] is None else edge.target} is not in the rule", edge.id)
            continue
        if edge.domain not in (SOURCE, TARGET) or any(e.domain != edge.domain for e in ends):
            report("domain-mismatch", "edge and endpoints must share a source or target domain", edge.id)
            continue
        metamodel = schema.metamodel(edge.domain)
        edge_type = metamodel.edge_types.get(edge.type)
        if edge_type is None:
            report("unknown-edge-type", f"{edge.type} is not declared in {metamodel.name}", edge.id)
            continue
        for end, declared in zip(ends, (edge_type.source, edge_type.target)):
            if end.type in metamodel.node_types and not _compatible(metamodel, end.type, declared):
                report("endpoint-type-mismatch", f"{end.id} cannot be a {declared}", edge.id)
        if edge_type.ordered and edge.position is None:
            report("ordinal-required", f"{edge.type} is ordered", edge.id)
        if not edge_type.ordered and edge.position is not None:
            report("ordinal-forbidden", f"{edge.type} is not ordered", edge.id)
        if not edge.created and any(e.created for e in ends):
            report("created-endpoint", "context edge touches a created element", edge.id)
        if edge.created and not any(e.created for e in ends) and creates_elements:
            report("context-edge", "created edge joins two context elements", edge.id)

    for binding in rule.bindings:
        ends = [elements.get(binding.from_element), elements.get(binding.to_element)]
        if None in ends:
            report("dangling-binding", "binding endpoint is not in the rule", binding.resolver)
            continue
        if ends[0].domain != ends[1].domain or ends[0].domain == CORR:
            report("binding-domain", "binding endpoints must share a source or target domain", binding.resolver)
        if ends[1].created:
            report("binding-not-context", f"binding target {binding.to_element} is created", binding.resolver)
        if not binding.resolver:
            report("binding-resolver", "binding names no resolver", binding.to_element)

    housed = rule.housing()
    temps = set(rule.temps)
    for temp in temps & set(housed):
        report("temp-conflict", f"temp ${temp} is also housed in an element", temp)
    for instance in rule.effective_csp():
        try:
            definition = constraints.get(instance.name)
        except ConstraintRegistryError:
            report("unknown-constraint", f"{instance.name} is not registered")
            continue
        if definition.arity != len(instance.args):
            report("arity-mismatch", f"{instance} expects {definition.arity} arguments")
        for var in instance.variables():
            if var not in housed and var not in temps:
                report("unhoused-variable", f"${var} is neither housed nor a temp", instance.name)
    return problems


# --- JSON ---------------------------------------------------------------------

def _decode_arg(value):
    if isinstance(value, str) and value.startswith("$$"):
        return value[1:]
    if isinstance(value, str) and value.startswith("$"):
        return Var(value[1:])
    return value


def _encode_arg(value):
    if isinstance(value, Var):
        return f"${value.name}"
    if isinstance(value, str) and value.startswith("$"):
        return "$" + value
    return value


def _var_name(value, where):
    if not isinstance(value, str) or not value.startswith("$") or value.startswith("$$"):
        raise RuleSetError(f"{where}: {value!r} is not a $variable")
    return value[1:]


def _rule_from_dict(data):
    name = data["name"]
    elements = tuple(
        RuleElement(
            id=item["id"],
            domain=item["domain"],
            type=item["type"],
            modifier=item.get("modifier", CREATE),
            assignments=dict(item.get("assignments", {})),
            variables={attr: _var_name(v, f"{name}.{item['id']}") for attr, v in item.get("variables", {}).items()},
            source=item.get("source"),
            target=item.get("target"),
        )
        for item in data.get("elements", [])
    )
    edges = tuple(
        RuleEdge(
            id=item["id"],
            domain=item["domain"],
            type=item["type"],
            source=item["source"],
            target=item["target"],
            modifier=item.get("modifier", CREATE),
            position=_decode_arg(item.get("position")),
        )
        for item in data.get("edges", [])
    )
    csp = tuple(
        ConstraintInstance(item["constraint"], tuple(_decode_arg(a) for a in item.get("args", [])))
        for item in data.get("csp", [])
    )
    bindings = tuple(BindingExpr(item["from"], item["to"], item["resolver"]) for item in data.get("bindings", []))
    temps = tuple(_var_name(t, f"{name}.temps") for t in data.get("temps", []))
    return TggRule(name, elements, edges, csp, bindings, temps, data.get("post"))


def load_ruleset(document, metamodels, constraints=None):
    """Parse and validate a rule set document.

    ``metamodels`` maps metamodel names to :class:`Metamodel` objects; the
    document's schema section refers to them by name.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise RuleSetError(f"invalid rule set JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    try:
        schema_names = data["schema"]
        schema = TggSchema(
            metamodels[schema_names["source"]],
            metamodels[schema_names["corr"]],
            metamodels[schema_names["target"]],
        )
        rules = tuple(_rule_from_dict(item) for item in data.get("rules", []))
    except KeyError as exc:
        raise RuleSetError(f"rule set is missing or names an unknown {exc.args[0]!r}") from exc
    except (TypeError, AttributeError) as exc:
        raise RuleSetError(f"malformed rule set: {exc}") from exc

    problems = list(schema.validate())
    names = set()
    for rule in rules:
        if rule.name in names:
            problems.append(Diagnostic("duplicate-rule", "rule name is used twice", rule.name))
        names.add(rule.name)
        problems.extend(validate_rule(rule, schema, constraints))
    axioms = [r.name for r in rules if r.is_axiom]
    if not axioms:
        problems.append(Diagnostic("no-axiom", "the rule set declares no axiom"))
    elif len(axioms) > 1:
        problems.append(Diagnostic("multiple-axioms", f"axioms: {', '.join(axioms)}"))
    if problems:
        summary = "; ".join(str(p) for p in problems[:5])
        raise RuleSetError(f"rule set is invalid: {summary}", diagnostics=problems)
    return RuleSet(schema, rules)


def _rule_to_dict(rule):
    data = {"name": rule.name, "elements": [], "edges": []}
    for element in rule.elements:
        item = {"id": element.id, "domain": element.domain, "type": element.type, "modifier": element.modifier}
        if element.assignments:
            item["assignments"] = dict(element.assignments)
        if element.variables:
            item["variables"] = {attr: f"${var}" for attr, var in element.variables.items()}
        if element.domain == CORR:
            item["source"] = element.source
            item["target"] = element.target
        data["elements"].append(item)
    for edge in rule.edges:
        item = {
            "id": edge.id,
            "domain": edge.domain,
            "type": edge.type,
            "source": edge.source,
            "target": edge.target,
            "modifier": edge.modifier,
        }
        if edge.position is not None:
            item["position"] = _encode_arg(edge.position)
        data["edges"].append(item)
    if rule.temps:
        data["temps"] = [f"${t}" for t in rule.temps]
    data["csp"] = [{"constraint": c.name, "args": [_encode_arg(a) for a in c.args]} for c in rule.csp]
    if rule.bindings:
        data["bindings"] = [{"from": b.from_element, "to": b.to_element, "resolver": b.resolver} for b in rule.bindings]
    if rule.post_processor:
        data["post"] = rule.post_processor
    return data


def serialize_ruleset(ruleset):
    data = {
        "schema": {
            "source": ruleset.schema.source_mm.name,
            "corr": ruleset.schema.corr_mm.name,
            "target": ruleset.schema.target_mm.name,
        },
        "rules": [_rule_to_dict(r) for r in ruleset.rules],
    }
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"

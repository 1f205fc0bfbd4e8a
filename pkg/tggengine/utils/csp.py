"""Bidirectional attribute constraints.

A constraint is evaluated under an *adornment*: a string over ``B`` (bound)
and ``F`` (free) with one letter per argument. ``sort_csp`` picks, per
direction, an order in which every constraint can run with the variables
bound so far; ``solve_csp`` then executes that order.

Semantics functions receive every argument (``None`` in free slots). A
generating adornment returns a tuple with the values of the free slots or
``None`` when the constraint fails; the all-``B`` adornment returns a bool.
"""
import re
from dataclasses import dataclass, field

from tggengine.utils.exceptions import ConstraintRegistryError, CspFailure, CspUnsortable
from tggengine.utils.operators import (
    OPERATOR_PREC,
    SYMBOLS,
    join_parts,
    normalize_ws,
    split_at_first,
    split_at_operator,
)

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return f"${self.name}"


@dataclass(frozen=True)
class ConstraintDef:
    name: str
    arity: int
    semantics: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def allowed(self):
        return frozenset(self.semantics)

    def check(self, *args):
        return bool(self.semantics["B" * self.arity](*args))


@dataclass(frozen=True)
class ConstraintInstance:
    name: str
    args: tuple

    def variables(self):
        return [a.name for a in self.args if isinstance(a, Var)]

    def __str__(self):
        rendered = ", ".join(str(a) if isinstance(a, Var) else repr(a) for a in self.args)
        return f"{self.name}({rendered})"


@dataclass(frozen=True)
class CspPlan:
    steps: tuple
    initially_bound: frozenset

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    def describe(self):
        return [f"{instance} {adornment}" for instance, adornment in self.steps]


class ConstraintRegistry:
    def __init__(self, definitions=()):
        self._definitions = {}
        for definition in definitions:
            self.register(definition)

    def register(self, definition):
        if definition.name in self._definitions:
            raise ConstraintRegistryError(f"constraint {definition.name} is already registered")
        for adornment in definition.semantics:
            if len(adornment) != definition.arity or set(adornment) - {"B", "F"}:
                raise ConstraintRegistryError(f"{definition.name}: bad adornment {adornment!r}")
        if "B" * definition.arity not in definition.semantics:
            raise ConstraintRegistryError(f"{definition.name}: the all-bound check is missing")
        self._definitions[definition.name] = definition

    def get(self, name):
        try:
            return self._definitions[name]
        except KeyError:
            raise ConstraintRegistryError(f"constraint {name} is not registered") from None

    def copy(self):
        return ConstraintRegistry(self._definitions.values())

    def __contains__(self, name):
        return name in self._definitions

    def __iter__(self):
        return iter(self._definitions.values())


def register_constraint(definition, registry):
    registry.register(definition)


def _pattern(instance, bound):
    return "".join("B" if not isinstance(a, Var) or a.name in bound else "F" for a in instance.args)


def sort_csp(instances, initially_bound, registry):
    """Order ``instances`` so each runs under an allowed adornment.

    At every step the first pending instance (declaration order) whose
    current bound/free pattern is allowed is scheduled.
    """
    bound = set(initially_bound)
    pending = list(instances)
    steps = []
    for instance in pending:
        definition = registry.get(instance.name)
        if len(instance.args) != definition.arity:
            raise ConstraintRegistryError(f"{instance} expects {definition.arity} arguments")
    while pending:
        for instance in pending:
            adornment = _pattern(instance, bound)
            if adornment in registry.get(instance.name).allowed:
                break
        else:
            stuck = {v for inst in pending for v in inst.variables() if v not in bound}
            raise CspUnsortable(stuck, pending)
        pending.remove(instance)
        steps.append((instance, adornment))
        bound.update(instance.variables())
    return CspPlan(tuple(steps), frozenset(initially_bound))


def _value(arg, values):
    return values.get(arg.name) if isinstance(arg, Var) else arg


def solve_csp(plan, bindings, registry):
    """Execute ``plan`` and return the completed variable map.

    Raises :class:`CspFailure` when a constraint fails; that means the rule
    does not apply, not that something broke.
    """
    missing = set(plan.initially_bound) - set(bindings)
    if missing:
        raise CspUnsortable(missing, [])
    values = dict(bindings)
    for instance, adornment in plan:
        definition = registry.get(instance.name)
        args = [_value(a, values) if flag == "B" else None for a, flag in zip(instance.args, adornment)]
        result = definition.semantics[adornment](*args)
        if "F" not in adornment:
            if not result:
                raise CspFailure(instance, adornment, args)
            continue
        if result is None:
            raise CspFailure(instance, adornment, args)
        free = [a for a, flag in zip(instance.args, adornment) if flag == "F"]
        for arg, value in zip(free, result):
            if arg.name in values and values[arg.name] != value:
                raise CspFailure(instance, adornment, args)
            values[arg.name] = value
    for instance, _ in plan:
        definition = registry.get(instance.name)
        args = [_value(a, values) for a in instance.args]
        if not definition.check(*args):
            raise CspFailure(instance, "B" * definition.arity, args)
    return values


# --- builtins -----------------------------------------------------------------

def split_on(whole, sep):
    """Split at the first top-level ``sep``; plain text search for non-symbols."""
    if sep in SYMBOLS:
        return split_at_first(whole, sep)
    index = whole.find(sep) if sep else -1
    if index < 0:
        return None
    return whole[:index].strip(), whole[index + len(sep):].strip()


def _eq_check(a, b):
    return a == b


def _concat_forward(sep, left, right, whole):
    return (join_parts(left, sep, right),)


def _concat_split(sep, left, right, whole):
    return split_on(whole, sep)


def _concat_check(sep, left, right, whole):
    if normalize_ws(whole) == normalize_ws(join_parts(left, sep, right)):
        return True
    return split_on(whole, sep) == (left, right)


def _suffix_strip(base, suffix, whole):
    if not whole.endswith(suffix):
        return None
    return (whole[: len(whole) - len(suffix)],)


def _with_op_forward(op, left, right, whole):
    if op not in OPERATOR_PREC or not left or not right:
        return None
    return (join_parts(left, op, right),)


def _with_op_check(op, left, right, whole):
    if op not in OPERATOR_PREC:
        return False
    if normalize_ws(whole) == normalize_ws(join_parts(left, op, right)):
        return True
    return split_at_operator(whole) == (op, left, right)


EQ = ConstraintDef("eq", 2, {
    "BB": _eq_check,
    "BF": lambda a, b: (a,),
    "FB": lambda a, b: (b,),
})

CONCAT = ConstraintDef("concat", 4, {
    "BBBF": _concat_forward,
    "BFFB": _concat_split,
    "BBBB": _concat_check,
})

ADD_SUFFIX = ConstraintDef("addSuffix", 3, {
    "BBF": lambda base, suffix, whole: (base + suffix,),
    "FBB": _suffix_strip,
    "BBB": lambda base, suffix, whole: base + suffix == whole,
})

IS_AN_IDENTIFIER = ConstraintDef("isAnIdentifier", 1, {
    "B": lambda s: isinstance(s, str) and IDENTIFIER.fullmatch(s) is not None,
})

CONCAT_WITH_OPERATOR_SYMBOL = ConstraintDef("concatWithOperatorSymbol", 4, {
    "BBBF": _with_op_forward,
    "FFFB": lambda op, left, right, whole: split_at_operator(whole),
    "BBBB": _with_op_check,
})

BUILTINS = (EQ, CONCAT, ADD_SUFFIX, IS_AN_IDENTIFIER, CONCAT_WITH_OPERATOR_SYMBOL)


def default_registry():
    """A fresh registry holding the builtin constraints."""
    return ConstraintRegistry(BUILTINS)

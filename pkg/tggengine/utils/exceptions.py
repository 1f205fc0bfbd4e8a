"""Error hierarchy of the transformation engine.

Diagnostics returned by ``conforms``/``validate_rule`` are plain values
(:class:`Diagnostic`); everything raised derives from :class:`TggError`.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    location: str = ""

    def __str__(self):
        if self.location:
            return f"[{self.code}] {self.location}: {self.message}"
        return f"[{self.code}] {self.message}"


class TggError(Exception):
    """Root of every error raised by the engine."""


class GraphError(TggError):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class RuleSetError(TggError):
    def __init__(self, message, diagnostics=None, line=None, column=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
        self.line = line
        self.column = column


class ConstraintRegistryError(TggError):
    pass


class CspUnsortable(TggError):
    def __init__(self, stuck_variables, pending):
        names = ", ".join(sorted(stuck_variables))
        super().__init__(f"no eligible constraint; unbound variables: {names}")
        self.stuck_variables = frozenset(stuck_variables)
        self.pending = list(pending)


class CspFailure(TggError):
    def __init__(self, instance, adornment, values):
        super().__init__(f"{instance} failed under {adornment} with {values!r}")
        self.instance = instance
        self.adornment = adornment
        self.values = values


class RegistryError(TggError):
    pass


class ResolverFailure(TggError):
    pass


class PostProcessorViolation(TggError):
    pass


class PostConditionFailure(TggError):
    """A post-processor run as an assertion found the match inconsistent."""


class TransformationStuck(TggError):
    def __init__(self, message, untranslated=()):
        super().__init__(message)
        self.untranslated = list(untranslated)


class MiniJavaSyntaxError(TggError):
    def __init__(self, message, line, column, expected=()):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.expected = tuple(expected)


class UnparseError(TggError):
    def __init__(self, node_id, message):
        super().__init__(f"node {node_id}: {message}")
        self.node_id = node_id

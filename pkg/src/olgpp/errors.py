"""Exception hierarchy for the olgpp engine.

Every engine-raised error derives from OlgError so callers can catch one
type at the CLI boundary. Parse-time problems carry a source position;
everything else carries the offending identifier in its message.
"""


class OlgError(Exception):
    """Base class for all engine errors."""


class ParseError(OlgError):
    """Malformed DSL input (documents, schemas, queries, contexts)."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)


class UnboundVariableError(ParseError):
    """A query references a variable no pattern binds."""


class UnknownNodeTypeError(OlgError):
    """Node type is not registered in the active schema."""


class UnknownEdgeTypeError(OlgError):
    """Edge type is not registered in the active schema."""


class DuplicateIdError(OlgError):
    """Caller supplied an id that is already present."""


class MissingNodeError(OlgError):
    """A node id does not resolve."""


class MissingEndpointError(OlgError):
    """An edge references a nonexistent endpoint."""


class FrozenGraphError(OlgError):
    """Mutation attempted on a frozen snapshot."""


class SchemaError(OlgError):
    """The schema file itself is malformed; the engine refuses to start."""


class DegenerateRegionError(OlgError):
    """Region has fewer than 3 vertices or (near-)zero area."""


class ContainmentCycleError(OlgError):
    """Jurisdiction containment edges form a cycle."""


class SubclassCycleError(OlgError):
    """subclass_of edges form a cycle."""


class NegativeIntervalError(OlgError):
    """An interval end precedes its start."""


class LogicCycleError(OlgError):
    """Logic-group membership or combination edges form a cycle."""


class MalformedGroupError(OlgError):
    """A logic group cannot be turned into a well-formed expression tree."""


class UnresolvableLeafError(OlgError):
    """A condition leaf needs a context input (position, instant, party)
    that the evaluation context does not carry."""


class NonNumericOperandError(OlgError):
    """A formula operand does not resolve to a number."""


class EmptyFormulaError(OlgError):
    """Formula evaluation was requested on a node with no operands."""


class DefeasibilityCycleError(OlgError):
    """Exception or override edges form a cycle among applicable triggers."""


class BindingLimitError(OlgError):
    """Query execution exceeded the configured binding cap."""

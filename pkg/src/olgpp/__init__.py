"""Legal rule graphs: build, validate, resolve, and query.

The package represents regulatory rules as typed property graphs and answers
compliance questions over them: which obligations, prohibitions, and
permissions apply to a party at a place and time once exception chains and
override hierarchies are settled, plus a small graph-pattern query language.
"""

from .errors import OlgError
from .graph import BaseProps, EdgeRecord, NodeRecord, PropertyGraph
from .schema import TypeSchema, Violation, builtin_schema, load_schema, validate_graph

__all__ = [
    "BaseProps",
    "EdgeRecord",
    "NodeRecord",
    "OlgError",
    "PropertyGraph",
    "TypeSchema",
    "Violation",
    "builtin_schema",
    "load_schema",
    "validate_graph",
]

__version__ = "0.1.0"

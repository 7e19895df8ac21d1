"""Graph-pattern query language: parse, format, and execute."""

from .astnodes import Query, ResultTable
from .executor import DEFAULT_MAX_BINDINGS, execute
from .parser import format_query, parse_query

__all__ = [
    "DEFAULT_MAX_BINDINGS",
    "Query",
    "ResultTable",
    "execute",
    "format_query",
    "parse_query",
]

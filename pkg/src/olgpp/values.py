"""Property value kinds.

Graph properties are schemaless beyond kind checking: a value is a string,
number, boolean, calendar date, instant, duration, time window, geometry,
or a homogeneous list of one of those.
"""

from __future__ import annotations

from datetime import date, datetime, timedelta

from .spatial import GeoPoint, Region
from .temporal import TimeWindow

_SCALAR_KINDS = (
    (bool, "boolean"),  # bool before int: bool is an int subclass
    (int, "number"),
    (float, "number"),
    (str, "string"),
    (datetime, "instant"),
    (date, "date"),
    (timedelta, "duration"),
    (TimeWindow, "window"),
    (GeoPoint, "point"),
    (Region, "polygon"),
)


def value_kind(value) -> str:
    """Kind name for a property value; raises ValueError on anything else
    and on heterogeneous lists."""
    for typ, kind in _SCALAR_KINDS:
        if isinstance(value, typ):
            return kind
    if isinstance(value, (list, tuple)):
        if not value:
            return "list<empty>"
        kinds = {value_kind(v) for v in value}
        if len(kinds) > 1:
            raise ValueError(f"heterogeneous list mixes {sorted(kinds)}")
        return f"list<{kinds.pop()}>"
    raise ValueError(f"unsupported property value type: {type(value).__name__}")


def check_props(props: dict) -> dict:
    """Validate a property map in place and return it."""
    for key, value in props.items():
        if not isinstance(key, str) or not key:
            raise ValueError(f"property keys must be nonempty strings, got {key!r}")
        value_kind(value)
    return props

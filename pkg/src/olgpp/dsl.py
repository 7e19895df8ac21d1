"""Shared lexer and literal syntax for the engine's text formats.

One literal language serves the rule-document format, schema files, context
files, and the query language:

    strings     "curbside" or 'curbside'
    numbers     42, -3.5, plus unit-suffixed distances 500ft / 2mi / 152.4m
    booleans    true / false
    lists       ["a", "b"]
    dates       date(2024-01-15)
    instants    at(2024-06-01T12:30)
    windows     at(2024-06-01T10:00/2024-06-01T12:00) or daily(06:00,18:00[,mon|tue])
    durations   duration(60min)
    geometry    point(x,y), polygon((x,y),(x,y),(x,y),...), latlong(lat,long)

Distances normalize to meters at parse time. Constructor calls are scanned
as raw spans and parsed with per-constructor rules, which keeps the token
grammar small.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

from .errors import ParseError
from .spatial import GeoPoint, Region
from .temporal import ABSOLUTE, DAILY, WEEKDAYS, TimeWindow

EARTH_RADIUS_M = 6371000.0

_UNIT_TO_METERS = {
    "m": 1.0,
    "km": 1000.0,
    "ft": 0.3048,
    "mi": 1609.344,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>[ \t]+)
  | (?P<COMMENT>\#[^\n]*)
  | (?P<NEWLINE>\n)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<ARROW>->)
  | (?P<LARROW><-)
  | (?P<NUMBER>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<PUNCT>[{}\[\](),:;.=<>|/\-*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # STRING NUMBER IDENT ARROW LARROW NEWLINE EOF or the punct char
    text: str
    line: int
    col: int
    pos: int = field(compare=False, default=0)


class Lexer:
    """Tokenizes source text, tracking line/column for error messages."""

    def __init__(self, text: str, keep_newlines: bool = False):
        self.text = text
        self.keep_newlines = keep_newlines
        self.tokens = self._scan()
        self.i = 0

    def _scan(self):
        out = []
        pos, line, col = 0, 1, 1
        text = self.text
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            tok_text = m.group()
            if kind == "NEWLINE":
                if self.keep_newlines:
                    out.append(Token("NEWLINE", "\n", line, col, pos))
                line += 1
                col = 1
                pos = m.end()
                continue
            if kind not in ("WS", "COMMENT"):
                if kind == "PUNCT":
                    kind = tok_text
                # A '-' glued to a following digit after a value-position token
                # is a negative-number sign, not an operator.
                if (
                    kind == "-"
                    and pos + 1 < len(text)
                    and text[pos + 1].isdigit()
                    and (not out or out[-1].kind in ("{", "(", "[", ",", ":", "="))
                ):
                    m2 = _TOKEN_RE.match(text, pos + 1)
                    if m2 and m2.lastgroup == "NUMBER":
                        tok_text = "-" + m2.group()
                        out.append(Token("NUMBER", tok_text, line, col, pos))
                        col += len(tok_text)
                        pos = m2.end()
                        continue
                out.append(Token(kind, tok_text, line, col, pos))
            col += len(tok_text)
            pos = m.end()
        out.append(Token("EOF", "", line, col, pos))
        return out

    # -- cursor interface used by the parsers --

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                tok.line,
                tok.col,
            )
        return self.next()

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text.upper() == word.upper()

    def take_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            tok = self.peek()
            raise ParseError(
                f"expected keyword {word!r}, found {tok.text or 'end of input'!r}",
                tok.line,
                tok.col,
            )
        return self.next()

    def raw_span_to(self, closer: str, opener: str = "(") -> str:
        """Consume tokens up to the matching closer and return the raw text
        between the cursor and it. Used for constructor argument spans."""
        start_tok = self.peek()
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                raise ParseError(f"unterminated constructor, expected {closer!r}",
                                 start_tok.line, start_tok.col)
            if tok.kind == opener:
                depth += 1
            elif tok.kind == closer:
                if depth == 0:
                    raw = self.text[start_tok.pos:tok.pos]
                    self.next()
                    return raw
                depth -= 1
            self.next()


def unescape_string(tok: Token) -> str:
    body = tok.text[1:-1]
    return body.replace('\\"', '"').replace("\\'", "'").replace("\\\\", "\\")


def escape_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


# -- constructor parsing -------------------------------------------------------

_CONSTRUCTORS = frozenset({"date", "at", "daily", "duration", "point", "polygon", "latlong"})

_PAIR_RE = re.compile(
    r"\(\s*(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*,\s*(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*\)"
)
_TIME_RE = re.compile(r"^\d{1,2}:\d{2}$")


@dataclass(frozen=True)
class LatLong:
    """Geographic coordinates awaiting projection onto the planar frame."""

    lat: float
    long: float

    def project(self, origin: "LatLong") -> GeoPoint:
        # Equirectangular projection: fine at city scale.
        lat0 = math.radians(origin.lat)
        x = EARTH_RADIUS_M * math.radians(self.long - origin.long) * math.cos(lat0)
        y = EARTH_RADIUS_M * math.radians(self.lat - origin.lat)
        return GeoPoint(x, y)


def _ctor_error(name, raw, tok, why=""):
    detail = f": {why}" if why else ""
    return ParseError(f"malformed {name}({raw.strip()}){detail}", tok.line, tok.col)


def parse_constructor(name: str, raw: str, tok: Token):
    raw = raw.strip()
    try:
        if name == "date":
            return date.fromisoformat(raw)
        if name == "at":
            if "/" in raw:
                start_s, end_s = raw.split("/", 1)
                start = datetime.fromisoformat(start_s.strip())
                end = datetime.fromisoformat(end_s.strip())
                return TimeWindow(ABSOLUTE, start, end)
            return datetime.fromisoformat(raw)
        if name == "daily":
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) not in (2, 3) or not all(_TIME_RE.match(p) for p in parts[:2]):
                raise ValueError("want daily(HH:MM,HH:MM[,days])")
            start = time.fromisoformat(_pad_time(parts[0]))
            end = time.fromisoformat(_pad_time(parts[1]))
            recurrence = _parse_days(parts[2]) if len(parts) == 3 else None
            return TimeWindow(DAILY, start, end, recurrence)
        if name == "duration":
            m = re.fullmatch(r"(\d+(?:\.\d+)?)\s*min", raw)
            if not m:
                raise ValueError("want duration(Nmin)")
            return timedelta(minutes=float(m.group(1)))
        if name == "point":
            x_s, y_s = raw.split(",", 1)
            return GeoPoint(float(x_s), float(y_s))
        if name == "latlong":
            lat_s, long_s = raw.split(",", 1)
            return LatLong(float(lat_s), float(long_s))
        if name == "polygon":
            pts = [GeoPoint(float(a), float(b)) for a, b in _PAIR_RE.findall(raw)]
            cleaned = _PAIR_RE.sub("", raw).replace(",", "").strip()
            if cleaned:
                raise ValueError(f"unexpected text {cleaned!r}")
            return Region(tuple(pts))
    except ParseError:
        raise
    except Exception as exc:  # noqa: BLE001 - rewrap with position info
        raise _ctor_error(name, raw, tok, str(exc)) from exc
    raise _ctor_error(name, raw, tok, "unknown constructor")


def _pad_time(s: str) -> str:
    return s if len(s) == 5 else "0" + s


def _parse_days(spec: str) -> frozenset:
    if "-" in spec:
        lo, hi = spec.split("-", 1)
        i, j = WEEKDAYS.index(lo.strip()), WEEKDAYS.index(hi.strip())
        if i > j:
            raise ValueError(f"day range {spec!r} runs backwards")
        return frozenset(range(i, j + 1))
    return frozenset(WEEKDAYS.index(d.strip()) for d in spec.split("|"))


# -- generic value parsing -----------------------------------------------------


def parse_value(lx: Lexer):
    """One literal value at the cursor. Returns (value, raw_text_or_None);
    raw text is set when a unit conversion rewrote the number."""
    tok = lx.peek()
    if tok.kind == "STRING":
        lx.next()
        return unescape_string(tok), None
    if tok.kind == "NUMBER":
        lx.next()
        num = float(tok.text) if any(c in tok.text for c in ".eE") else int(tok.text)
        unit_tok = lx.peek()
        if (
            unit_tok.kind == "IDENT"
            and unit_tok.text in _UNIT_TO_METERS
            and unit_tok.pos == tok.pos + len(tok.text)
        ):
            lx.next()
            meters = float(num) * _UNIT_TO_METERS[unit_tok.text]
            return meters, f"{tok.text}{unit_tok.text}"
        return num, None
    if tok.kind == "IDENT":
        word = tok.text
        if word in ("true", "false"):
            lx.next()
            return word == "true", None
        if word in _CONSTRUCTORS and lx.peek(1).kind == "(":
            lx.next()
            lx.expect("(")
            raw = lx.raw_span_to(")")
            return parse_constructor(word, raw, tok), None
        raise ParseError(f"unexpected identifier {word!r} in value position",
                         tok.line, tok.col)
    if tok.kind == "[":
        lx.next()
        items = []
        if not lx.at("]"):
            while True:
                value, _ = parse_value(lx)
                items.append(value)
                if lx.at(","):
                    lx.next()
                    continue
                break
        lx.expect("]")
        return items, None
    raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}",
                     tok.line, tok.col)


def parse_props(lx: Lexer) -> tuple:
    """A {key:value, ...} block. Returns (props, raws) where raws maps keys
    whose numeric value was unit-converted to their original spelling."""
    props, raws = {}, {}
    lx.expect("{")
    if not lx.at("}"):
        while True:
            key_tok = lx.expect("IDENT")
            lx.expect(":")
            value, raw = parse_value(lx)
            if key_tok.text in props:
                raise ParseError(f"duplicate property {key_tok.text!r}",
                                 key_tok.line, key_tok.col)
            props[key_tok.text] = value
            if raw is not None:
                raws[key_tok.text] = raw
            if lx.at(","):
                lx.next()
                continue
            break
    lx.expect("}")
    return props, raws


# -- value formatting (round-trip serialization) --------------------------------


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return escape_string(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, datetime):
        return f"at({value.isoformat()})"
    if isinstance(value, date):
        return f"date({value.isoformat()})"
    if isinstance(value, timedelta):
        return f"duration({value.total_seconds() / 60:g}min)"
    if isinstance(value, TimeWindow):
        if value.kind == ABSOLUTE:
            return f"at({value.start.isoformat()}/{value.end.isoformat()})"
        days = ""
        if value.recurrence is not None:
            days = "," + "|".join(WEEKDAYS[d] for d in sorted(value.recurrence))
        return f"daily({value.start:%H:%M},{value.end:%H:%M}{days})"
    if isinstance(value, GeoPoint):
        return f"point({value.x:g},{value.y:g})"
    if isinstance(value, Region):
        pts = ",".join(f"({p.x:g},{p.y:g})" for p in value.polygon)
        return f"polygon({pts})"
    if isinstance(value, LatLong):
        return f"latlong({value.lat:g},{value.long:g})"
    raise ValueError(f"cannot format value of type {type(value).__name__}")


def format_props(props: dict, raws: dict | None = None) -> str:
    raws = raws or {}
    parts = []
    for key, value in props.items():
        text = raws.get(key, None)
        parts.append(f"{key}:{text if text is not None else format_value(value)}")
    return "{" + ", ".join(parts) + "}"

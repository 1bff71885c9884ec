"""Line-oriented LP-file reader and writer.

The dialect is a deliberately small subset of the classic LP format, used as
the interchange between executed candidate scripts and the scorer:

    Minimize | Maximize          (case-insensitive keywords)
      name: linear expression    (single objective line)
    Subject To
      name: expr (<=|=|>=) number
    Bounds                       (optional)
      l <= x <= u | x >= l | x <= u | x free
    Generals                     (optional name list)
    Binaries                     (optional name list)
    End

Numbers are decimal or scientific; a backslash starts a comment that runs to
the end of the line. Variables that only appear in expressions default to
continuous with bounds [0, +inf).
"""

from __future__ import annotations

import math
import re

from .errors import DuplicateName, ParseError
from . import model as ir
from .model import Constraint, LinExpr, Model, Objective, Variable

_NUM_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_SECTION_KEYWORDS = {
    "minimize": "objective",
    "maximize": "objective",
    "subject to": "constraints",
    "bounds": "bounds",
    "generals": "generals",
    "binaries": "binaries",
    "end": "end",
}


def _tokenize(line: str, lineno: int) -> list[tuple[str, str, int]]:
    """Split one line into (kind, text, column) tokens; kind in
    {num, ident, op, colon}."""
    tokens = []
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "\\":
            break  # comment
        m = _NUM_RE.match(line, i)
        if m:
            tokens.append(("num", m.group(), i + 1))
            i = m.end()
            continue
        m = _IDENT_RE.match(line, i)
        if m:
            tokens.append(("ident", m.group(), i + 1))
            i = m.end()
            continue
        if line.startswith("<=", i) or line.startswith(">=", i):
            tokens.append(("op", line[i : i + 2], i + 1))
            i += 2
            continue
        if ch in "+-=":
            tokens.append(("op", ch, i + 1))
            i += 1
            continue
        if ch == ":":
            tokens.append(("colon", ch, i + 1))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", lineno, i + 1)
    return tokens


def _parse_expr(tokens: list, lineno: int, stop_ops=("<=", "=", ">=")) -> tuple[LinExpr, int]:
    """Parse a linear expression from tokens, returning (expr, next index).

    Stops before a comparison operator from ``stop_ops``.
    """
    terms: dict[str, float] = {}
    constant = 0.0
    i = 0
    sign = 1.0
    pending = False  # a sign or coefficient has been consumed, a term must follow
    coef: float | None = None
    while i < len(tokens):
        kind, text, col = tokens[i]
        if kind == "op" and text in stop_ops and not pending and coef is None:
            break
        if kind == "op" and text in ("+", "-"):
            if coef is not None:
                # dangling coefficient becomes a constant before the next sign
                constant += sign * coef
                coef = None
                sign = 1.0
            sign *= -1.0 if text == "-" else 1.0
            pending = True
            i += 1
            continue
        if kind == "num":
            if coef is not None:
                raise ParseError("two numbers in a row in expression", lineno, col)
            coef = float(text)
            pending = True
            i += 1
            continue
        if kind == "ident":
            value = sign * (coef if coef is not None else 1.0)
            terms[text] = terms.get(text, 0.0) + value
            sign = 1.0
            coef = None
            pending = False
            i += 1
            continue
        raise ParseError(f"unexpected token {text!r} in expression", lineno, col)
    if pending and coef is None:
        col = tokens[i][2] if i < len(tokens) else len(tokens)
        raise ParseError("dangling sign in expression", lineno, col)
    if coef is not None:
        constant += sign * coef
    return LinExpr(terms, constant), i


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next_content(self) -> tuple[int, str] | None:
        """Next non-blank, non-comment line as (lineno, text)."""
        while self.pos < len(self.lines):
            raw = self.lines[self.pos]
            self.pos += 1
            body = raw.split("\\", 1)[0].strip()
            if body:
                return self.pos, body
        return None

    def peek_section(self, line: str) -> str | None:
        return _SECTION_KEYWORDS.get(line.strip().lower())


def parse_lp(text: str) -> Model:
    """Parse LP text into a Model. Raises ParseError with line/column info."""
    rd = _Reader(text)
    entry = rd.next_content()
    if entry is None:
        raise ParseError("empty LP file", 1)
    lineno, line = entry
    section = rd.peek_section(line)
    if section != "objective":
        raise ParseError("expected Minimize or Maximize", lineno)
    obj_sense = ir.MINIMIZE if line.strip().lower() == "minimize" else ir.MAXIMIZE

    order: list[str] = []
    bounds: dict[str, list[float]] = {}
    kinds: dict[str, str] = {}

    def touch(name: str) -> None:
        if name not in bounds:
            order.append(name)
            bounds[name] = [0.0, math.inf]
            kinds[name] = ir.CONTINUOUS

    entry = rd.next_content()
    if entry is None or rd.peek_section(entry[1]) is not None:
        raise ParseError("missing objective line", entry[0] if entry else lineno)
    lineno, line = entry
    tokens = _tokenize(line, lineno)
    if len(tokens) < 2 or tokens[0][0] != "ident" or tokens[1][0] != "colon":
        raise ParseError("objective must be 'name: expression'", lineno)
    obj_expr, used = _parse_expr(tokens[2:], lineno)
    if used != len(tokens) - 2:
        raise ParseError("trailing tokens after objective expression", lineno, tokens[2 + used][2])
    for v in obj_expr.terms:
        touch(v)

    entry = rd.next_content()
    if entry is None or rd.peek_section(entry[1]) != "constraints":
        raise ParseError("expected 'Subject To'", entry[0] if entry else lineno)

    constraints: list[Constraint] = []
    seen_cons: set[str] = set()
    entry = rd.next_content()
    while entry is not None and rd.peek_section(entry[1]) is None:
        lineno, line = entry
        tokens = _tokenize(line, lineno)
        if len(tokens) < 2 or tokens[0][0] != "ident" or tokens[1][0] != "colon":
            raise ParseError("constraint must be 'name: expr sense number'", lineno)
        cname = tokens[0][1]
        if cname in seen_cons:
            raise DuplicateName(f"duplicate constraint name {cname!r}", lineno)
        seen_cons.add(cname)
        expr, used = _parse_expr(tokens[2:], lineno)
        rest = tokens[2 + used :]
        if not rest or rest[0][0] != "op" or rest[0][1] not in ("<=", "=", ">="):
            raise ParseError("expected <=, = or >= in constraint", lineno,
                             rest[0][2] if rest else None)
        sense = rest[0][1]
        rhs_tokens = rest[1:]
        sign = 1.0
        while rhs_tokens and rhs_tokens[0][0] == "op" and rhs_tokens[0][1] in ("+", "-"):
            sign *= -1.0 if rhs_tokens[0][1] == "-" else 1.0
            rhs_tokens = rhs_tokens[1:]
        if len(rhs_tokens) != 1 or rhs_tokens[0][0] != "num":
            raise ParseError("constraint rhs must be a single number", lineno)
        rhs = sign * float(rhs_tokens[0][1])
        for v in expr.terms:
            touch(v)
        constraints.append(Constraint(cname, expr, sense, rhs))
        entry = rd.next_content()

    # optional trailing sections in fixed order
    while entry is not None:
        lineno, line = entry
        section = rd.peek_section(line)
        if section == "end":
            entry = None
            break
        if section == "bounds":
            entry = _parse_bounds(rd, touch, bounds)
        elif section in ("generals", "binaries"):
            kind = ir.INTEGER if section == "generals" else ir.BINARY
            entry = rd.next_content()
            while entry is not None and rd.peek_section(entry[1]) is None:
                lineno, line = entry
                for tok in _tokenize(line, lineno):
                    if tok[0] != "ident":
                        raise ParseError(f"expected variable name, got {tok[1]!r}", lineno, tok[2])
                    touch(tok[1])
                    kinds[tok[1]] = kind
                    if kind == ir.BINARY:
                        bounds[tok[1]] = [0.0, 1.0]
                entry = rd.next_content()
        else:
            raise ParseError(f"unexpected line {line!r}", lineno)
    else:
        raise ParseError("missing End", len(rd.lines))

    variables = [Variable(n, bounds[n][0], bounds[n][1], kinds[n]) for n in order]
    return Model(variables, constraints, Objective(obj_sense, obj_expr))


def _parse_bounds(rd: _Reader, touch, bounds: dict[str, list[float]]):
    entry = rd.next_content()
    while entry is not None and rd.peek_section(entry[1]) is None:
        lineno, line = entry
        tokens = _tokenize(line, lineno)
        shape = tuple(t[0] for t in tokens)
        texts = [t[1] for t in tokens]

        def number(idx: int, sign: float = 1.0) -> float:
            return sign * float(texts[idx])

        # forms: num <= ident <= num | ident >= num | ident <= num | ident free
        # numbers may carry a leading minus sign token
        norm: list[tuple[str, object]] = []
        i = 0
        while i < len(tokens):
            kind, text, col = tokens[i]
            if kind == "op" and text in ("+", "-") and i + 1 < len(tokens) and tokens[i + 1][0] == "num":
                norm.append(("num", float(tokens[i + 1][1]) * (-1.0 if text == "-" else 1.0)))
                i += 2
            elif kind == "num":
                norm.append(("num", float(text)))
                i += 1
            else:
                norm.append((kind, text))
                i += 1
        kinds_only = tuple(k for k, _ in norm)
        if kinds_only == ("num", "op", "ident", "op", "num") and norm[1][1] == "<=" and norm[3][1] == "<=":
            name = norm[2][1]
            touch(name)
            bounds[name][0] = norm[0][1]
            bounds[name][1] = norm[4][1]
        elif kinds_only == ("ident", "op", "num") and norm[1][1] == ">=":
            name = norm[0][1]
            touch(name)
            bounds[name][0] = norm[2][1]
        elif kinds_only == ("ident", "op", "num") and norm[1][1] == "<=":
            name = norm[0][1]
            touch(name)
            bounds[name][1] = norm[2][1]
        elif kinds_only == ("ident", "ident") and str(norm[1][1]).lower() == "free":
            name = norm[0][1]
            touch(name)
            bounds[name][0] = -math.inf
            bounds[name][1] = math.inf
        else:
            raise ParseError(f"unrecognized bounds line {line!r}", lineno)
        entry = rd.next_content()
    return entry


def _fmt(x: float) -> str:
    """Deterministic 12-significant-digit rendering."""
    if x == math.floor(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".12g")


def _fmt_expr(expr: LinExpr) -> str:
    # terms print in the expression's own (insertion) order so that
    # parse -> emit is byte-stable regardless of declaration order
    parts: list[str] = []
    for v, k in expr.terms.items():
        if k == 0.0:
            continue
        mag = abs(k)
        piece = v if mag == 1.0 else f"{_fmt(mag)} {v}"
        if not parts:
            parts.append(piece if k > 0 else f"- {piece}")
        else:
            parts.append(f"+ {piece}" if k > 0 else f"- {piece}")
    if expr.constant != 0.0:
        mag = _fmt(abs(expr.constant))
        if not parts:
            parts.append(mag if expr.constant > 0 else f"- {mag}")
        else:
            parts.append(f"+ {mag}" if expr.constant > 0 else f"- {mag}")
    if not parts:
        return "0"
    return " ".join(parts)


def emit_lp(m: Model) -> str:
    """Deterministic LP text for a Model; inverse of parse_lp up to tolerance."""
    out: list[str] = []
    out.append("Minimize" if m.objective.sense == ir.MINIMIZE else "Maximize")
    out.append(f" obj: {_fmt_expr(m.objective.expr)}")
    out.append("Subject To")
    for c in m.constraints:
        out.append(f" {c.name}: {_fmt_expr(c.lhs)} {c.sense} {_fmt(c.rhs)}")

    # trailing sections are name-sorted so emit is byte-stable under any
    # declaration order the parser reconstructs
    by_name = sorted(m.variables, key=lambda v: v.name)
    mentioned = set(m.objective.expr.terms)
    for c in m.constraints:
        mentioned.update(c.lhs.terms)
    bound_lines: list[str] = []
    for v in by_name:
        if v.kind == ir.BINARY:
            continue
        lo, hi = v.lower, v.upper
        if lo == 0.0 and math.isinf(hi):
            if v.name not in mentioned and v.kind == ir.CONTINUOUS:
                # keep otherwise-invisible variables alive across a round trip
                bound_lines.append(f" {v.name} >= 0")
            continue
        if math.isinf(lo) and math.isinf(hi):
            bound_lines.append(f" {v.name} free")
        elif math.isinf(lo):
            bound_lines.append(f" {v.name} free")
            bound_lines.append(f" {v.name} <= {_fmt(hi)}")
        elif math.isinf(hi):
            bound_lines.append(f" {v.name} >= {_fmt(lo)}")
        elif lo == 0.0:
            bound_lines.append(f" {v.name} <= {_fmt(hi)}")
        else:
            bound_lines.append(f" {_fmt(lo)} <= {v.name} <= {_fmt(hi)}")
    if bound_lines:
        out.append("Bounds")
        out.extend(bound_lines)

    generals = [v.name for v in by_name if v.kind == ir.INTEGER]
    if generals:
        out.append("Generals")
        out.extend(f" {n}" for n in generals)
    binaries = [v.name for v in by_name if v.kind == ir.BINARY]
    if binaries:
        out.append("Binaries")
        out.extend(f" {n}" for n in binaries)
    out.append("End")
    return "\n".join(out) + "\n"

"""Compact text format for two-stage and chance-constraint specs.

A spec document is line oriented: ``key: value`` pairs at the top level,
repeated ``scenario:`` or ``row:`` blocks with two-space-indented members,
and matrix keys (``A:``, ``B:``, ``D:``) whose rows follow on indented lines
of whitespace-separated numbers. ``#`` starts a comment. Example:

    kind: two_stage
    deterministic: false
    x: x1
    y: y1
    c: 1
    p: 0.5 0.5
    ss_senses: >=

    scenario:
      q: 2
      B:
        -1
      D:
        1
      d: 1

    scenario:
      q: 2
      B:
        -1
      D:
        1
      d: 3

Chance documents use ``kind: chance`` with per-row blocks carrying ``a``,
``sense``, ``mu``, ``sigma`` and ``alpha`` (or a top-level ``alpha`` when
``joint: true``). ``emit_spec`` writes the same shape back deterministically.
"""

from __future__ import annotations

import math

import numpy as np

from .detequiv import ChanceRow, ChanceSpec, NormalDist, ScenarioBlock, TwoStageSpec
from .errors import ParseError, UnsupportedRandomness


def _fmt(x: float) -> str:
    if x == math.floor(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".12g")


def _split_lines(text: str) -> list[tuple[int, int, str]]:
    """(lineno, indent, body) for content lines, comments stripped."""
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        out.append((i, indent, body.strip()))
    return out


class _Block:
    def __init__(self, name: str, lineno: int):
        self.name = name
        self.lineno = lineno
        self.scalars: dict[str, str] = {}
        self.matrices: dict[str, list[list[float]]] = {}


def _parse_blocks(text: str) -> tuple[dict[str, str], dict[str, list[list[float]]], list[_Block]]:
    """Top-level scalars and matrices plus ordered sub-blocks."""
    lines = _split_lines(text)
    top_scalars: dict[str, str] = {}
    top_matrices: dict[str, list[list[float]]] = {}
    blocks: list[_Block] = []
    current: _Block | None = None
    matrix_key: str | None = None
    matrix_into: dict[str, list[list[float]]] | None = None

    for lineno, indent, body in lines:
        if ":" in body:
            key, _, value = body.partition(":")
            key = key.strip()
            value = value.strip()
            if indent == 0:
                current = None
                if key in ("scenario", "row"):
                    current = _Block(key if not value else f"{key} {value}", lineno)
                    blocks.append(current)
                    matrix_key = None
                    continue
                if value == "":
                    matrix_key = key
                    matrix_into = top_matrices
                    top_matrices[key] = []
                    continue
                top_scalars[key] = value
                matrix_key = None
                continue
            # indented member line
            if current is None:
                raise ParseError(f"indented line outside a block: {body!r}", lineno)
            if value == "":
                matrix_key = key
                matrix_into = current.matrices
                current.matrices[key] = []
                continue
            current.scalars[key] = value
            matrix_key = None
            continue
        # bare number row (matrix content)
        if matrix_key is None or matrix_into is None:
            raise ParseError(f"unexpected line {body!r}", lineno)
        try:
            matrix_into[matrix_key].append([float(tok) for tok in body.split()])
        except ValueError:
            raise ParseError(f"bad number row {body!r}", lineno) from None
    return top_scalars, top_matrices, blocks


def _floats(value: str) -> list[float]:
    return [float(tok) for tok in value.split()] if value else []


def _names(value: str) -> list[str]:
    return value.split() if value else []


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ParseError(f"expected boolean, got {value!r}")


def parse_spec(text: str) -> TwoStageSpec | ChanceSpec:
    scalars, matrices, blocks = _parse_blocks(text)
    kind = scalars.get("kind")
    if kind == "two_stage":
        return _parse_two_stage(scalars, matrices, blocks)
    if kind == "chance":
        return _parse_chance(scalars, blocks)
    raise ParseError(f"kind must be two_stage or chance, got {kind!r}")


def _parse_two_stage(scalars, matrices, blocks) -> TwoStageSpec:
    c = _floats(scalars.get("c", ""))
    b = _floats(scalars.get("b", ""))
    a_rows = matrices.get("A", [])
    scenario_blocks = [blk for blk in blocks if blk.name == "scenario"]
    if not scenario_blocks:
        raise ParseError("two_stage spec needs at least one scenario block")
    scenarios = []
    for blk in scenario_blocks:
        for need in ("q", "d"):
            if need not in blk.scalars:
                raise ParseError(f"scenario missing {need!r}", blk.lineno)
        scenarios.append(
            ScenarioBlock(
                q=_floats(blk.scalars["q"]),
                B=np.array(blk.matrices.get("B", [])) if blk.matrices.get("B") else
                np.zeros((len(_floats(blk.scalars["d"])), len(c))),
                D=np.array(blk.matrices.get("D", [])) if blk.matrices.get("D") else
                np.zeros((len(_floats(blk.scalars["d"])), len(_floats(blk.scalars["q"])))),
                d=_floats(blk.scalars["d"]),
            )
        )
    probabilities = _floats(scalars.get("p", ""))
    if not probabilities:
        probabilities = [1.0] if len(scenarios) == 1 else []
    return TwoStageSpec(
        c=c,
        A=np.array(a_rows) if a_rows else np.zeros((0, len(c))),
        b=b,
        first_senses=_names(scalars.get("fs_senses", "")),
        probabilities=probabilities,
        scenarios=scenarios,
        second_senses=_names(scalars.get("ss_senses", "")) or None,
        deterministic=_bool(scalars.get("deterministic", "false")),
        x_names=_names(scalars.get("x", "")) or None,
        y_names=_names(scalars.get("y", "")) or None,
        first_names=_names(scalars.get("fs_names", "")) or None,
        second_names=_names(scalars.get("ss_names", "")) or None,
    )


def _parse_chance(scalars, blocks) -> ChanceSpec:
    joint = _bool(scalars.get("joint", "false"))
    joint_alpha = float(scalars["alpha"]) if "alpha" in scalars else None
    rows = []
    row_blocks = [blk for blk in blocks if blk.name.startswith("row")]
    if not row_blocks:
        raise ParseError("chance spec needs at least one row block")
    for i, blk in enumerate(row_blocks):
        dist_kind = blk.scalars.get("dist", "normal").strip().lower()
        if dist_kind != "normal":
            raise UnsupportedRandomness(f"row distribution {dist_kind!r} is not supported")
        name = blk.scalars.get("name", f"r{i + 1}")
        for need in ("a", "mu", "sigma"):
            if need not in blk.scalars:
                raise ParseError(f"row {name} missing {need!r}", blk.lineno)
        rows.append(
            ChanceRow(
                name=name,
                a=_floats(blk.scalars["a"]),
                sense=blk.scalars.get("sense", ">="),
                dist=NormalDist(float(blk.scalars["mu"]), float(blk.scalars["sigma"])),
                alpha=float(blk.scalars["alpha"]) if "alpha" in blk.scalars else None,
            )
        )
    return ChanceSpec(
        c=_floats(scalars.get("c", "")),
        rows=rows,
        joint=joint,
        joint_alpha=joint_alpha,
        x_names=_names(scalars.get("x", "")) or None,
    )


def _emit_vector(key: str, values) -> str:
    return f"{key}: " + " ".join(_fmt(float(v)) for v in np.atleast_1d(values))


def _emit_matrix(key: str, rows: np.ndarray, indent: str = "") -> list[str]:
    out = [f"{indent}{key}:"]
    for row in np.atleast_2d(rows):
        out.append(f"{indent}  " + " ".join(_fmt(float(v)) for v in row))
    return out


def emit_spec(spec: TwoStageSpec | ChanceSpec) -> str:
    """Deterministic text for a spec; parse_spec inverts it."""
    if isinstance(spec, TwoStageSpec):
        return _emit_two_stage(spec)
    return _emit_chance(spec)


def _emit_two_stage(spec: TwoStageSpec) -> str:
    out = ["kind: two_stage"]
    out.append(f"deterministic: {'true' if spec.deterministic else 'false'}")
    out.append("x: " + " ".join(spec.x_names))
    if spec.y_names:
        out.append("y: " + " ".join(spec.y_names))
    out.append(_emit_vector("c", spec.c))
    if spec.b.size:
        out.extend(_emit_matrix("A", spec.A))
        out.append(_emit_vector("b", spec.b))
        out.append("fs_senses: " + " ".join(spec.first_senses))
        out.append("fs_names: " + " ".join(spec.first_names))
    out.append(_emit_vector("p", spec.probabilities))
    out.append("ss_senses: " + " ".join(spec.second_senses))
    out.append("ss_names: " + " ".join(spec.second_names))
    for blk in spec.scenarios:
        out.append("")
        out.append("scenario:")
        out.append("  " + _emit_vector("q", blk.q))
        out.extend(_emit_matrix("B", blk.B, "  "))
        out.extend(_emit_matrix("D", blk.D, "  "))
        out.append("  " + _emit_vector("d", blk.d))
    return "\n".join(out) + "\n"


def _emit_chance(spec: ChanceSpec) -> str:
    out = ["kind: chance"]
    out.append(f"joint: {'true' if spec.joint else 'false'}")
    if spec.joint and spec.joint_alpha is not None:
        out.append(f"alpha: {_fmt(spec.joint_alpha)}")
    out.append("x: " + " ".join(spec.x_names))
    out.append(_emit_vector("c", spec.c))
    for row in spec.rows:
        out.append("")
        out.append("row:")
        out.append(f"  name: {row.name}")
        out.append("  " + _emit_vector("a", row.a))
        out.append(f"  sense: {row.sense}")
        out.append(f"  mu: {_fmt(row.dist.mu)}")
        out.append(f"  sigma: {_fmt(row.dist.sigma)}")
        if row.alpha is not None:
            out.append(f"  alpha: {_fmt(row.alpha)}")
    return "\n".join(out) + "\n"

"""Canonical line-oriented text format for programs.

Sections, in order: a ``layout:`` header, an ``init:`` block with one line per
floating-point memory slot, a ``def get_action:`` block and one ``def cadf<k>:``
block per subroutine. Instructions are one per line,
``out = OPnn(in1, in2; consts=[...]; idx=[...])`` with the consts/idx sections
present exactly when the op carries them. Floats are printed with 17
significant digits so deserialize(serialize(p)) == p bit-exactly. Lines
starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

import re

from .ops import CALL_NAME, CALL_OPCODE, OPS_BY_NAME
from .program import Address, Instruction, MemoryLayout, Program


class ProgramParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize(program: Program) -> str:
    lay = program.layout
    lines = [
        "layout: scalars=%d vectors=%d matrices=%d indices=%d vec_dim=%d mat_dim=%d"
        % (lay.n_scalar, lay.n_vector, lay.n_matrix, lay.n_index, lay.vec_dim, lay.mat_dim),
        "init:",
    ]
    for i, x in enumerate(program.init_scalars):
        lines.append(f"s{i} = {_fmt(x)}")
    for i, vec in enumerate(program.init_vectors):
        lines.append(f"v{i} = [" + ", ".join(_fmt(x) for x in vec) + "]")
    for i, mat in enumerate(program.init_matrices):
        rows = ", ".join("[" + ", ".join(_fmt(x) for x in row) + "]" for row in mat)
        lines.append(f"m{i} = [{rows}]")
    for fname, body in program.functions():
        lines.append(f"def {fname}:")
        for instr in body:
            lines.append(instr.render())
    return "\n".join(lines) + "\n"


_LAYOUT_RE = re.compile(
    r"layout:\s*scalars=(\d+)\s+vectors=(\d+)\s+matrices=(\d+)\s+indices=(\d+)"
    r"\s+vec_dim=(\d+)\s+mat_dim=(\d+)\s*$"
)
_DEF_RE = re.compile(r"def\s+(get_action|cadf(\d+)):\s*$")
_INIT_RE = re.compile(r"([svm])(\d+)\s*=\s*(.*)$")
_INSTR_RE = re.compile(r"(?:(.*?)\s*=\s*)?(OP\d+|CALL_CADF)\((.*)\)\s*$")


def _parse_floats(text: str, line_no: int) -> list:
    text = text.strip()
    if not text:
        return []
    out = []
    for tok in text.split(","):
        try:
            out.append(float(tok))
        except ValueError:
            raise ProgramParseError(line_no, f"bad float {tok.strip()!r}")
    return out


def _parse_vector(text: str, line_no: int, dim: int) -> tuple:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ProgramParseError(line_no, "vector init must be [..]")
    vals = _parse_floats(text[1:-1], line_no)
    if len(vals) != dim:
        raise ProgramParseError(line_no, f"vector init needs {dim} values, got {len(vals)}")
    return tuple(vals)


def _parse_matrix(text: str, line_no: int, dim: int) -> tuple:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ProgramParseError(line_no, "matrix init must be [[..], ..]")
    rows = re.findall(r"\[([^\[\]]*)\]", text[1:-1])
    if len(rows) != dim:
        raise ProgramParseError(line_no, f"matrix init needs {dim} rows, got {len(rows)}")
    return tuple(_parse_vector("[" + r + "]", line_no, dim) for r in rows)


def _parse_addr(text: str, line_no: int) -> Address:
    try:
        return Address.parse(text)
    except ValueError as exc:
        raise ProgramParseError(line_no, str(exc)) from None


def _parse_instruction(line: str, line_no: int) -> Instruction:
    m = _INSTR_RE.match(line)
    if not m:
        raise ProgramParseError(line_no, f"unrecognized instruction {line!r}")
    lhs, name, body = m.group(1), m.group(2), m.group(3)

    if name == CALL_NAME:
        if lhs is None:
            raise ProgramParseError(line_no, "CALL_CADF needs three output addresses")
        outs = tuple(_parse_addr(t, line_no) for t in lhs.split(","))
        secs = [s.strip() for s in body.split(";")]
        if len(secs) != 4:
            raise ProgramParseError(line_no, "CALL_CADF needs callee; scalars; vectors; indices sections")
        try:
            callee = int(secs[0])
        except ValueError:
            raise ProgramParseError(line_no, f"bad callee {secs[0]!r}")
        ins = []
        for sec in secs[1:]:
            ins.extend(_parse_addr(t, line_no) for t in sec.split(",") if t.strip())
        if len(ins) != 8:
            raise ProgramParseError(line_no, f"CALL_CADF needs 8 inputs, got {len(ins)}")
        return Instruction(CALL_OPCODE, inputs=tuple(ins), callee=callee, outputs=outs)

    spec = OPS_BY_NAME.get(name)
    if spec is None:
        raise ProgramParseError(line_no, f"unknown op {name}")
    consts: tuple = ()
    lidx: tuple = ()
    addr_part = ""
    secs = [s.strip() for s in body.split(";")] if body.strip() else []
    for pos, sec in enumerate(secs):
        if sec.startswith("consts="):
            val = sec[len("consts="):].strip()
            if not (val.startswith("[") and val.endswith("]")):
                raise ProgramParseError(line_no, "consts must be [..]")
            consts = tuple(_parse_floats(val[1:-1], line_no))
        elif sec.startswith("idx="):
            val = sec[len("idx="):].strip()
            if not (val.startswith("[") and val.endswith("]")):
                raise ProgramParseError(line_no, "idx must be [..]")
            try:
                lidx = tuple(int(t) for t in val[1:-1].split(",") if t.strip())
            except ValueError:
                raise ProgramParseError(line_no, "bad idx list")
        elif pos == 0:
            addr_part = sec
        else:
            raise ProgramParseError(line_no, f"unexpected section {sec!r}")
    ins = tuple(_parse_addr(t, line_no) for t in addr_part.split(",") if t.strip())
    out = _parse_addr(lhs, line_no) if lhs is not None else None
    return Instruction(spec.opcode, inputs=ins, output=out, literal_consts=consts, literal_indices=lidx)


def deserialize(text: str) -> Program:
    layout = None
    init_s = init_v = init_m = None
    section = None          # None | "init" | function name
    bodies: dict = {}
    order: list = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LAYOUT_RE.match(line)
        if m:
            if layout is not None:
                raise ProgramParseError(line_no, "duplicate layout header")
            ns, nv, nm, ni, vd, md = (int(g) for g in m.groups())
            layout = MemoryLayout(ns, nv, nm, ni, vd, md)
            init_s = [0.0] * ns
            init_v = [None] * nv
            init_m = [None] * nm
            continue
        if layout is None:
            raise ProgramParseError(line_no, "layout header must come first")
        if line == "init:":
            section = "init"
            continue
        m = _DEF_RE.match(line)
        if m:
            section = m.group(1)
            if section in bodies:
                raise ProgramParseError(line_no, f"duplicate function {section}")
            bodies[section] = []
            order.append(section)
            continue
        if section == "init":
            m = _INIT_RE.match(line)
            if not m:
                raise ProgramParseError(line_no, f"bad init line {line!r}")
            kind, slot_s, rest = m.groups()
            slot = int(slot_s)
            if kind == "s":
                if not 0 <= slot < layout.n_scalar:
                    raise ProgramParseError(line_no, f"scalar slot {slot} out of range")
                try:
                    init_s[slot] = float(rest)
                except ValueError:
                    raise ProgramParseError(line_no, f"bad float {rest!r}")
            elif kind == "v":
                if not 0 <= slot < layout.n_vector:
                    raise ProgramParseError(line_no, f"vector slot {slot} out of range")
                init_v[slot] = _parse_vector(rest, line_no, layout.vec_dim)
            else:
                if not 0 <= slot < layout.n_matrix:
                    raise ProgramParseError(line_no, f"matrix slot {slot} out of range")
                init_m[slot] = _parse_matrix(rest, line_no, layout.mat_dim)
        elif section is not None:
            bodies[section].append(_parse_instruction(line, line_no))
        else:
            raise ProgramParseError(line_no, f"statement outside any section: {line!r}")

    if layout is None:
        raise ProgramParseError(0, "missing layout header")
    if "get_action" not in bodies:
        raise ProgramParseError(0, "missing get_action block")
    zero_v = (0.0,) * layout.vec_dim
    zero_m = (zero_v,) * layout.mat_dim
    cadf_names = sorted((n for n in bodies if n != "get_action"), key=lambda n: int(n[4:]))
    expected = [f"cadf{k}" for k in range(len(cadf_names))]
    if cadf_names != expected:
        raise ProgramParseError(0, f"cadf blocks must be numbered 0..{len(cadf_names) - 1}")
    return Program(
        layout=layout,
        init_scalars=tuple(init_s),
        init_vectors=tuple(v if v is not None else zero_v for v in init_v),
        init_matrices=tuple(m if m is not None else zero_m for m in init_m),
        get_action=tuple(bodies["get_action"]),
        cadfs=tuple(tuple(bodies[n]) for n in expected),
    )

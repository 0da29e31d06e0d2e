"""Free-format MPS reader and writer."""

from __future__ import annotations

import io
import math
from pathlib import Path
from typing import Iterable, TextIO

from .model import Constraint, ModelError, Problem, Relation, Sense, Variable, VarType, validate

_SECTIONS = ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"]
_UNSUPPORTED = {"SOS", "INDICATORS", "QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX",
                "OBJSENSE_MAX", "CSECTION", "PWLOBJ", "GENCONS", "LAZYCONS", "USERCUTS"}
_ROW_TYPES = {"N", "L", "G", "E"}


class MpsError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class _Col:
    __slots__ = ("name", "obj", "entries", "integer", "binary", "lower", "upper", "lower_set")

    def __init__(self, name: str, integer: bool):
        self.name = name
        self.obj = 0.0
        self.entries: dict[int, float] = {}
        self.integer = integer
        self.binary = False
        self.lower = 0.0
        self.upper = math.inf
        self.lower_set = False


def _number(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MpsError(lineno, f"expected a number, got {tok!r}") from None


def parse_mps(source: str | TextIO | Iterable[str]) -> Problem:
    """Parse free-format MPS text into a validated :class:`Problem`."""
    if isinstance(source, str):
        source = io.StringIO(source)

    name = ""
    sense = Sense.MINIMIZE
    obj_row: str | None = None
    free_rows: set[str] = set()
    row_index: dict[str, int] = {}
    row_types: list[str] = []
    row_names: list[str] = []
    rhs: dict[int, float] = {}
    ranges: dict[int, float] = {}
    cols: list[_Col] = []
    col_index: dict[str, int] = {}
    in_int = False
    section_pos = -1
    section = None
    ended = False
    lineno = 0

    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        toks = line.split()
        if not line[0].isspace():
            head = toks[0].upper()
            if head in _UNSUPPORTED or head.startswith("SOS"):
                raise MpsError(lineno, f"unsupported section {head}")
            if head not in _SECTIONS:
                raise MpsError(lineno, f"unknown section {toks[0]!r}")
            pos = _SECTIONS.index(head)
            if pos <= section_pos:
                raise MpsError(lineno, f"section {head} out of order")
            if head in ("COLUMNS",) and section_pos < _SECTIONS.index("ROWS"):
                raise MpsError(lineno, "COLUMNS before ROWS")
            section_pos = pos
            section = head
            if head == "NAME":
                name = " ".join(toks[1:])
            elif head == "OBJSENSE" and len(toks) > 1:
                sense = _parse_sense(toks[1], lineno)
            elif head == "ENDATA":
                ended = True
                break
            continue

        if section is None or section == "NAME":
            raise MpsError(lineno, "data line outside of a section")
        if section == "OBJSENSE":
            sense = _parse_sense(toks[0], lineno)
        elif section == "ROWS":
            if len(toks) != 2:
                raise MpsError(lineno, "ROWS entry needs a type and a name")
            rtype, rname = toks[0].upper(), toks[1]
            if rtype not in _ROW_TYPES:
                raise MpsError(lineno, f"unknown row type {toks[0]!r}")
            if rname in row_index or rname == obj_row or rname in free_rows:
                raise MpsError(lineno, f"duplicate row {rname!r}")
            if rtype == "N":
                if obj_row is None:
                    obj_row = rname
                else:
                    free_rows.add(rname)
            else:
                row_index[rname] = len(row_names)
                row_names.append(rname)
                row_types.append(rtype)
        elif section == "COLUMNS":
            if len(toks) >= 3 and toks[1].strip("'\"").upper() == "MARKER":
                marker = toks[2].strip("'\"").upper()
                if marker == "INTORG":
                    in_int = True
                elif marker == "INTEND":
                    in_int = False
                else:
                    raise MpsError(lineno, f"unknown marker {toks[2]!r}")
                continue
            if len(toks) not in (3, 5):
                raise MpsError(lineno, "COLUMNS entry needs 'column row value [row value]'")
            cname = toks[0]
            if cols and cols[-1].name == cname:
                col = cols[-1]
            else:
                if cname in col_index:
                    raise MpsError(lineno, f"duplicate column {cname!r}")
                col = _Col(cname, in_int)
                col_index[cname] = len(cols)
                cols.append(col)
            for rname, tok in zip(toks[1::2], toks[2::2]):
                val = _number(tok, lineno)
                if rname == obj_row:
                    col.obj = val
                elif rname in free_rows:
                    continue
                elif rname in row_index:
                    i = row_index[rname]
                    if i in col.entries:
                        raise MpsError(lineno, f"duplicate entry for column {cname!r} in row {rname!r}")
                    if val != 0.0:
                        col.entries[i] = val
                else:
                    raise MpsError(lineno, f"unknown row {rname!r}")
        elif section in ("RHS", "RANGES"):
            pairs = toks[1:] if len(toks) % 2 == 1 else toks
            if len(pairs) not in (2, 4):
                raise MpsError(lineno, f"malformed {section} entry")
            target = rhs if section == "RHS" else ranges
            for rname, tok in zip(pairs[0::2], pairs[1::2]):
                val = _number(tok, lineno)
                if rname == obj_row:
                    if section == "RHS" and val != 0.0:
                        raise MpsError(lineno, "objective constant in RHS is not supported")
                    continue
                if rname in free_rows:
                    continue
                if rname not in row_index:
                    raise MpsError(lineno, f"unknown row {rname!r}")
                target[row_index[rname]] = val
        elif section == "BOUNDS":
            _parse_bound(toks, lineno, cols, col_index)

    if not ended:
        raise MpsError(lineno, "missing ENDATA")
    if section_pos < _SECTIONS.index("COLUMNS"):
        raise MpsError(lineno, "missing ROWS/COLUMNS sections")

    variables = []
    coeffs: list[dict[int, float]] = [dict() for _ in row_names]
    for j, col in enumerate(cols):
        if col.binary:
            vtype = VarType.BINARY
        elif col.integer:
            vtype = VarType.INTEGER
        else:
            vtype = VarType.CONTINUOUS
        variables.append(Variable(col.name, col.lower, col.upper, col.obj, vtype))
        for i, a in col.entries.items():
            coeffs[i][j] = a

    constraints = []
    for i, rname in enumerate(row_names):
        rtype = row_types[i]
        b = rhs.get(i, 0.0)
        if i in ranges:
            r = ranges[i]
            if rtype == "L":
                lo = b - abs(r)
            elif rtype == "G":
                lo = b
            else:
                lo = b + r if r < 0 else b
            constraints.append(Constraint(rname, coeffs[i], Relation.RANGED, lo, abs(r)))
        else:
            rel = {"L": Relation.LE, "G": Relation.GE, "E": Relation.EQ}[rtype]
            constraints.append(Constraint(rname, coeffs[i], rel, b))

    problem = Problem(name, sense, variables, constraints)
    try:
        return validate(problem)
    except ModelError as exc:
        raise MpsError(lineno, str(exc)) from exc


def _parse_sense(tok: str, lineno: int) -> Sense:
    t = tok.upper()
    if t in ("MAX", "MAXIMIZE"):
        return Sense.MAXIMIZE
    if t in ("MIN", "MINIMIZE"):
        return Sense.MINIMIZE
    raise MpsError(lineno, f"unknown objective sense {tok!r}")


def _parse_bound(toks: list[str], lineno: int, cols: list[_Col], col_index: dict[str, int]) -> None:
    btype = toks[0].upper()
    valueless = btype in ("FR", "MI", "PL")
    if btype == "SC":
        raise MpsError(lineno, "semicontinuous bounds are not supported")
    if btype not in ("UP", "LO", "FX", "FR", "MI", "PL", "BV", "LI", "UI"):
        raise MpsError(lineno, f"unknown bound type {toks[0]!r}")
    rest = toks[1:]
    # the bound-set name is optional in free format
    if valueless:
        if len(rest) == 2:
            rest = rest[1:]
    elif btype == "BV":
        if len(rest) == 3 or (len(rest) == 2 and rest[0] not in col_index):
            rest = rest[1:]
    elif len(rest) == 3:
        rest = rest[1:]
    if not rest or len(rest) > 2:
        raise MpsError(lineno, "malformed BOUNDS entry")
    cname = rest[0]
    if cname not in col_index:
        raise MpsError(lineno, f"unknown column {cname!r}")
    col = cols[col_index[cname]]
    if valueless or (btype == "BV" and len(rest) == 1):
        val = None
    else:
        if len(rest) != 2:
            raise MpsError(lineno, f"bound {btype} needs a value")
        val = _number(rest[1], lineno)

    if btype == "UP":
        col.upper = val
        if val < 0 and col.lower == 0.0 and not col.lower_set:
            col.lower = -math.inf
    elif btype == "LO":
        col.lower = val
        col.lower_set = True
    elif btype == "FX":
        col.lower = col.upper = val
        col.lower_set = True
    elif btype == "FR":
        col.lower, col.upper = -math.inf, math.inf
        col.lower_set = True
    elif btype == "MI":
        col.lower = -math.inf
        col.lower_set = True
    elif btype == "PL":
        col.upper = math.inf
    elif btype == "BV":
        col.integer = True
        col.binary = True
        col.lower, col.upper = 0.0, 1.0
        col.lower_set = True
    elif btype == "LI":
        col.integer = True
        col.lower = val
        col.lower_set = True
    elif btype == "UI":
        col.integer = True
        col.upper = val
        if val < 0 and col.lower == 0.0 and not col.lower_set:
            col.lower = -math.inf


def read_mps(path: str | Path) -> Problem:
    with open(path) as fh:
        return parse_mps(fh)


def _num(x: float) -> str:
    return repr(float(x))


def write_mps(problem: Problem) -> str:
    """Render ``problem`` as free-format MPS that :func:`parse_mps` reads back exactly."""
    out = [f"NAME {problem.name}" if problem.name else "NAME"]
    if problem.sense is Sense.MAXIMIZE:
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(" N  obj")
    kinds = {Relation.LE: "L", Relation.GE: "G", Relation.EQ: "E", Relation.RANGED: "G"}
    for con in problem.constraints:
        out.append(f" {kinds[con.relation]}  {con.name}")

    by_col: list[list[tuple[str, float]]] = [[] for _ in problem.variables]
    for con in problem.constraints:
        for j, a in sorted(con.coefficients.items()):
            by_col[j].append((con.name, a))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, var in enumerate(problem.variables):
        want_int = var.is_integer
        if want_int != in_int:
            tag = "'INTORG'" if want_int else "'INTEND'"
            out.append(f"    MARKER{marker:04d} 'MARKER' {tag}")
            marker += 1
            in_int = want_int
        out.append(f"    {var.name} obj {_num(var.obj_coeff)}")
        for rname, a in by_col[j]:
            out.append(f"    {var.name} {rname} {_num(a)}")
    if in_int:
        out.append(f"    MARKER{marker:04d} 'MARKER' 'INTEND'")

    out.append("RHS")
    for con in problem.constraints:
        if con.rhs != 0.0:
            out.append(f"    RHS {con.name} {_num(con.rhs)}")
    ranged = [c for c in problem.constraints if c.relation is Relation.RANGED]
    if ranged:
        out.append("RANGES")
        for con in ranged:
            out.append(f"    RNG {con.name} {_num(con.range)}")

    bounds = []
    for var in problem.variables:
        lo, hi, n = var.lower, var.upper, var.name
        if var.integrality is VarType.BINARY:
            bounds.append(f" BV BND {n}")
            if lo == 0.0 and hi == 1.0:
                continue
        if lo == hi:
            bounds.append(f" FX BND {n} {_num(lo)}")
            continue
        if math.isinf(lo) and math.isinf(hi):
            bounds.append(f" FR BND {n}")
            continue
        if math.isinf(lo):
            bounds.append(f" MI BND {n}")
        elif lo != 0.0 or hi < 0:
            bounds.append(f" LO BND {n} {_num(lo)}")
        if not math.isinf(hi):
            bounds.append(f" UP BND {n} {_num(hi)}")
    if bounds:
        out.append("BOUNDS")
        out += bounds
    out.append("ENDATA")
    return "\n".join(out) + "\n"

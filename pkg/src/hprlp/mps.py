"""Reader for the MPS linear-program interchange format.

Tolerant, line-oriented tokenization: both fixed-column and free-form
files are split on whitespace, '*' lines are comments, and section
headers start in column one.  Supported sections: NAME, OBJSENSE, ROWS,
COLUMNS (with INTORG/INTEND markers), RHS, RANGES, BOUNDS, ENDATA.

Row types map to activity intervals (rhs r, default 0):

    L: (-inf, r]     G: [r, +inf)     E: [r, r]

and a RANGES value R refines them to

    L: [r - |R|, r]  G: [r, r + |R|]  E: [r, r + R] if R >= 0 else [r + R, r].

Variables default to [0, +inf).  An RHS entry on the objective row is
the negated objective constant.  Integer markers and bound keys are
recorded but relaxed: the built problem is the continuous relaxation.
"""

from __future__ import annotations

import gzip
import io
import os
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from .model import LpProblem
from .sparse import SparseMatrix

__all__ = ["MpsDocument", "MpsParseError", "parse_mps", "build_problem"]

_SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")
_ROW_TYPES = ("N", "L", "G", "E")
_BOUND_KEYS_VALUE = ("UP", "LO", "FX", "LI", "UI")
_BOUND_KEYS_FLAG = ("FR", "MI", "PL", "BV")


class MpsParseError(Exception):
    """Parse failure with the 1-based source line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class MpsDocument:
    """Raw sections of one MPS file, before numeric assembly.

    ``row_types`` keeps declaration order for all rows including the
    objective ('N') rows; ``entries`` are (column, row, value) triplets
    in file order.  ``warnings`` collects tolerated irregularities from
    both parsing and problem building.
    """

    name: str | None = None
    obj_sense: str = "minimize"
    objective_row: str | None = None
    row_types: dict[str, str] = field(default_factory=dict)
    column_order: list[str] = field(default_factory=list)
    entries: list[tuple[str, str, float]] = field(default_factory=list)
    rhs_entries: list[tuple[str, float]] = field(default_factory=list)
    range_entries: list[tuple[str, float]] = field(default_factory=list)
    bound_entries: list[tuple[str, str, float | None]] = field(default_factory=list)
    integer_columns: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def constraint_rows(self) -> list[str]:
        return [name for name, kind in self.row_types.items() if kind != "N"]


def _number(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MpsParseError(f"malformed numeric field {token!r}", line_no) from None


def _open_source(source):
    """Yield (line_no, text) pairs; handles paths, .gz paths and streams."""
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    path = os.fspath(source)
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def parse_mps(source) -> MpsDocument:
    """Parse an MPS file (path, .gz path, or open stream) into sections.

    Raises MpsParseError with a line number for unknown sections,
    references to undeclared rows/columns, malformed numbers, duplicate
    row names, or RANGES entries on the objective row.  A missing
    ENDATA only warns.
    """
    doc = MpsDocument()
    section = None
    saw_endata = False
    in_integer_block = False
    known_columns: set[str] = set()

    fh = _open_source(source)
    try:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            is_header = not line[0].isspace()
            tok = line.split()

            if is_header:
                head = tok[0].upper()
                if head not in _SECTIONS:
                    raise MpsParseError(f"unknown section header {tok[0]!r}", line_no)
                section = head
                if head == "NAME":
                    doc.name = tok[1] if len(tok) > 1 else None
                elif head == "OBJSENSE" and len(tok) > 1:
                    doc.obj_sense = _parse_sense(tok[1], line_no)
                elif head == "ENDATA":
                    saw_endata = True
                    break
                continue

            if section is None:
                raise MpsParseError("data line before any section header", line_no)
            if section == "NAME":
                raise MpsParseError("unexpected data line in NAME section", line_no)

            if section == "OBJSENSE":
                doc.obj_sense = _parse_sense(tok[0], line_no)

            elif section == "ROWS":
                if len(tok) < 2:
                    raise MpsParseError("ROWS line needs a type and a name", line_no)
                kind = tok[0].upper()
                if kind not in _ROW_TYPES:
                    raise MpsParseError(f"unknown row type {tok[0]!r}", line_no)
                name = tok[1]
                if name in doc.row_types:
                    raise MpsParseError(f"duplicate row name {name!r}", line_no)
                doc.row_types[name] = kind
                if kind == "N" and doc.objective_row is None:
                    doc.objective_row = name

            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    marker = tok[-1].strip("'").upper()
                    if marker == "INTORG":
                        in_integer_block = True
                    elif marker == "INTEND":
                        in_integer_block = False
                    else:
                        raise MpsParseError(f"unknown marker {tok[-1]!r}", line_no)
                    continue
                if len(tok) < 3 or len(tok) % 2 == 0:
                    raise MpsParseError(
                        "COLUMNS line needs a column name and row/value pairs", line_no
                    )
                col = tok[0]
                if col not in known_columns:
                    known_columns.add(col)
                    doc.column_order.append(col)
                    if in_integer_block:
                        doc.integer_columns.append(col)
                for i in range(1, len(tok), 2):
                    row = tok[i]
                    if row not in doc.row_types:
                        raise MpsParseError(f"unknown row {row!r} in COLUMNS", line_no)
                    doc.entries.append((col, row, _number(tok[i + 1], line_no)))

            elif section in ("RHS", "RANGES"):
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                if not pairs or len(pairs) % 2 != 0:
                    raise MpsParseError(f"malformed {section} line", line_no)
                for i in range(0, len(pairs), 2):
                    row = pairs[i]
                    if row not in doc.row_types:
                        raise MpsParseError(f"unknown row {row!r} in {section}", line_no)
                    value = _number(pairs[i + 1], line_no)
                    if section == "RHS":
                        doc.rhs_entries.append((row, value))
                    else:
                        if doc.row_types[row] == "N":
                            raise MpsParseError(
                                f"RANGES entry on objective/free row {row!r}", line_no
                            )
                        doc.range_entries.append((row, value))

            elif section == "BOUNDS":
                key = tok[0].upper()
                if key not in _BOUND_KEYS_VALUE + _BOUND_KEYS_FLAG:
                    raise MpsParseError(f"unknown bound key {tok[0]!r}", line_no)
                if key in _BOUND_KEYS_VALUE:
                    if len(tok) < 3:
                        raise MpsParseError(f"bound {key} needs a value", line_no)
                    value = _number(tok[-1], line_no)
                    col = tok[-2]
                else:
                    value = None
                    col = tok[-1]
                    if len(tok) >= 3:
                        # tolerate a trailing numeric on a flag bound
                        try:
                            float(tok[-1])
                        except ValueError:
                            pass
                        else:
                            col = tok[-2]
                if col not in known_columns:
                    raise MpsParseError(f"unknown column {col!r} in BOUNDS", line_no)
                doc.bound_entries.append((key, col, value))
    finally:
        fh.close()

    if not saw_endata:
        doc.warnings.append("missing ENDATA record")
    if doc.objective_row is None:
        doc.warnings.append("no objective (N) row; objective is constant zero")
    return doc


def _parse_sense(token: str, line_no: int) -> str:
    t = token.upper()
    if t in ("MIN", "MINIMIZE"):
        return "minimize"
    if t in ("MAX", "MAXIMIZE"):
        return "maximize"
    raise MpsParseError(f"unknown objective sense {token!r}", line_no)


def build_problem(doc: MpsDocument) -> LpProblem:
    """Assemble the numeric problem from parsed sections.

    Duplicate matrix entries are summed (warning), entries on
    non-objective N rows are dropped (warning), and integrality is
    relaxed (warning).  Raises ValueError for inconsistent bounds.
    """
    rows = doc.constraint_rows
    row_index = {name: i for i, name in enumerate(rows)}
    col_index = {name: j for j, name in enumerate(doc.column_order)}
    m, n = len(rows), len(doc.column_order)

    free_rows_dropped = set()
    c = np.zeros(n)
    c_seen: set[str] = set()
    coo: dict[tuple[int, int], float] = {}
    dup_count = 0
    for col, row, value in doc.entries:
        j = col_index[col]
        kind = doc.row_types[row]
        if kind == "N":
            if row == doc.objective_row:
                if col in c_seen:
                    dup_count += 1
                c_seen.add(col)
                c[j] += value
            else:
                free_rows_dropped.add(row)
            continue
        key = (row_index[row], j)
        if key in coo:
            dup_count += 1
            coo[key] += value
        else:
            coo[key] = value
    if dup_count:
        _note(doc, f"{dup_count} duplicate matrix/objective entries summed")
    for row in sorted(free_rows_dropped):
        _note(doc, f"non-objective free row {row!r} dropped")

    if coo:
        r_idx, c_idx = zip(*coo.keys())
        A = SparseMatrix.from_coo(m, n, list(r_idx), list(c_idx), list(coo.values()))
    else:
        A = SparseMatrix.from_coo(m, n, [], [], [])

    rhs: dict[str, float] = {}
    for row, value in doc.rhs_entries:
        if row in rhs:
            _note(doc, f"duplicate RHS entry for row {row!r}; keeping the last")
        rhs[row] = value
    ranges: dict[str, float] = {}
    for row, value in doc.range_entries:
        if row in ranges:
            _note(doc, f"duplicate RANGES entry for row {row!r}; keeping the last")
        ranges[row] = value

    obj_constant = 0.0
    if doc.objective_row is not None and doc.objective_row in rhs:
        obj_constant = -rhs[doc.objective_row]

    l_con = np.empty(m)
    u_con = np.empty(m)
    for name, i in row_index.items():
        r = rhs.get(name, 0.0)
        kind = doc.row_types[name]
        if kind == "L":
            lo, hi = -np.inf, r
        elif kind == "G":
            lo, hi = r, np.inf
        else:  # E
            lo, hi = r, r
        if name in ranges:
            rv = ranges[name]
            if kind == "L":
                lo = r - abs(rv)
            elif kind == "G":
                hi = r + abs(rv)
            else:
                lo, hi = (r, r + rv) if rv >= 0.0 else (r + rv, r)
        l_con[i], u_con[i] = lo, hi

    l_var = np.zeros(n)
    u_var = np.full(n, np.inf)
    lower_set = np.zeros(n, dtype=bool)
    integer_marked = set(doc.integer_columns)
    for key, col, value in doc.bound_entries:
        j = col_index[col]
        if key == "UP":
            u_var[j] = value
            if value < 0.0 and not lower_set[j]:
                l_var[j] = -np.inf
                _note(
                    doc,
                    f"UP bound {value} < 0 on column {col!r} without a lower bound; "
                    "lower bound set to -inf",
                )
        elif key == "LO":
            l_var[j] = value
            lower_set[j] = True
        elif key == "FX":
            l_var[j] = u_var[j] = value
            lower_set[j] = True
        elif key == "FR":
            l_var[j], u_var[j] = -np.inf, np.inf
            lower_set[j] = True
        elif key == "MI":
            l_var[j] = -np.inf
            lower_set[j] = True
        elif key == "PL":
            u_var[j] = np.inf
        elif key == "BV":
            l_var[j], u_var[j] = 0.0, 1.0
            lower_set[j] = True
            integer_marked.add(col)
        elif key == "LI":
            l_var[j] = value
            lower_set[j] = True
            integer_marked.add(col)
        elif key == "UI":
            u_var[j] = value
            integer_marked.add(col)

    if integer_marked:
        _note(doc, f"integrality relaxed for {len(integer_marked)} column(s)")

    bad = np.flatnonzero(l_var > u_var)
    if bad.size:
        name = doc.column_order[bad[0]]
        raise ValueError(
            f"column {name!r}: lower bound {l_var[bad[0]]} exceeds upper {u_var[bad[0]]}"
        )

    sense = doc.obj_sense
    if sense == "maximize":
        c = -c
        obj_constant = -obj_constant

    return LpProblem(
        c=c,
        A=A,
        l_con=l_con,
        u_con=u_con,
        l_var=l_var,
        u_var=u_var,
        obj_constant=obj_constant,
        obj_sense=sense,
    )


def _note(doc: MpsDocument, message: str):
    doc.warnings.append(message)
    _warnings.warn(message, stacklevel=3)

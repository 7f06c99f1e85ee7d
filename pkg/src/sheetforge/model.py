"""Shared domain types: bounds, tables, formulas, equations, objects,
cell addresses, and workbooks.

Everything here is an immutable value.  Formula trees are plain frozen
dataclasses; two formulas are equal iff they are structurally equal.
Model-space formulas reference table elements, sheet-space formulas
reference cells; a single formula never mixes the two.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import AddressUnderflowError, ModelError

# --------------------------------------------------------------------------
# column letters and cell addresses

_A1_RE = re.compile(
    r"^(?:(?:'([^']+)'|([A-Za-z_][A-Za-z0-9_.]*))!)?"
    r"(\$?)([A-Za-z]{1,3})(\$?)([1-9][0-9]*)$"
)


def col_letters(col: int) -> str:
    """Bijective base-26 column name: 1 -> A, 26 -> Z, 27 -> AA."""
    if col < 1:
        raise ModelError(f"column index must be >= 1, got {col}")
    out = ""
    while col:
        col, rem = divmod(col - 1, 26)
        out = chr(ord("A") + rem) + out
    return out


def col_number(letters: str) -> int:
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


@dataclass(frozen=True, slots=True)
class CellAddr:
    """Absolute position of one cell: sheet name, 1-based column and row."""

    sheet: str
    col: int
    row: int

    def __post_init__(self):
        if self.col < 1 or self.row < 1:
            raise ModelError(f"cell address out of grid: col={self.col} row={self.row}")

    def __str__(self) -> str:
        return a1_format(self)


def addr_add(a: CellAddr, dx: int, dy: int) -> CellAddr:
    """Move an address by a vector; underflow below column/row 1 is an error."""
    col, row = a.col + dx, a.row + dy
    if col < 1 or row < 1:
        raise AddressUnderflowError(
            f"{a1_format(a)} + vector({dx},{dy}) leaves the grid"
        )
    return CellAddr(a.sheet, col, row)


def needs_quoting(sheet: str) -> bool:
    return not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", sheet)


def format_sheet_prefix(sheet: str | None) -> str:
    if sheet is None or sheet == "":
        return ""
    if needs_quoting(sheet):
        return "'" + sheet.replace("'", "''") + "'!"
    return sheet + "!"


def a1_format(a: "CellAddr | CellRef") -> str:
    """Canonical A1 text for an address or reference, with sheet prefix."""
    if isinstance(a, CellAddr):
        return f"{format_sheet_prefix(a.sheet)}{col_letters(a.col)}{a.row}"
    ca = "$" if a.col_abs else ""
    ra = "$" if a.row_abs else ""
    return f"{format_sheet_prefix(a.sheet)}{ca}{col_letters(a.col)}{ra}{a.row}"


def a1_parse(text: str) -> "CellRef":
    """Parse `[Sheet!]$?COL$?ROW`, preserving absolute markers."""
    m = _A1_RE.match(text.strip())
    if m is None:
        raise ModelError(f"not a cell reference: {text!r}")
    quoted, bare, cabs, letters, rabs, row = m.groups()
    sheet = quoted if quoted is not None else bare
    return CellRef(sheet, col_number(letters), int(row), bool(cabs), bool(rabs))


def parse_cell_addr(text: str, default_sheet: str | None = None) -> CellAddr:
    """Parse a plain address like `Lets!D8`; absolute markers are ignored."""
    ref = a1_parse(text)
    sheet = ref.sheet if ref.sheet is not None else default_sheet
    if sheet is None:
        raise ModelError(f"cell address {text!r} needs a sheet name")
    return CellAddr(sheet, ref.col, ref.row)


# --------------------------------------------------------------------------
# formula trees

@dataclass(frozen=True, slots=True)
class Num:
    value: float


@dataclass(frozen=True, slots=True)
class Str:
    value: str


@dataclass(frozen=True, slots=True)
class NameRef:
    """A bare name: a size parameter or a quantified variable used as a value.

    Both are replaced by literal numbers before a formula reaches a workbook.
    """

    name: str


@dataclass(frozen=True, slots=True)
class Index:
    """One index position of a table element reference: literal, variable,
    or variable plus constant offset.  `var is None` means literal `offset`."""

    var: str | None
    offset: int


@dataclass(frozen=True, slots=True)
class ElementRef:
    """Model-space reference to a table element."""

    table: str
    indices: tuple[Index, ...]


@dataclass(frozen=True, slots=True)
class CellRef:
    """Sheet-space reference.  Coordinates are always absolute positions;
    the flags only record how the reference is written (for $ markers and
    R1C1 offsets).  `sheet is None` means the host cell's own sheet."""

    sheet: str | None
    col: int
    row: int
    col_abs: bool = False
    row_abs: bool = False


@dataclass(frozen=True, slots=True)
class RangeRef:
    start: "CellRef | OffsetRef"
    end: "CellRef | OffsetRef"


@dataclass(frozen=True, slots=True)
class OffsetRef:
    """A reference in layout-relative normal form (structure discovery).
    Each coordinate is either an absolute position or a delta from the
    cell holding the formula."""

    sheet: str | None
    col_abs: bool
    col: int
    row_abs: bool
    row: int


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # + - * / & = <> < > <= >=
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Neg:
    operand: "Formula"


@dataclass(frozen=True, slots=True)
class Call:
    name: str  # SUM, COUNTIF, IF, MIN, MAX
    args: tuple["Formula", ...]


Formula = (
    Num | Str | NameRef | ElementRef | CellRef | RangeRef | OffsetRef | BinOp | Neg | Call
)

FUNCTIONS = ("SUM", "COUNTIF", "IF", "MIN", "MAX")

# precedence: comparisons < concatenation < additive < multiplicative < unary
_PREC = {
    "=": 1, "<>": 1, "<": 1, ">": 1, "<=": 1, ">=": 1,
    "&": 2,
    "+": 3, "-": 3,
    "*": 4, "/": 4,
}


def format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def quote_string(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def format_formula(f: Formula, atom) -> str:
    """Render a formula tree; `atom(node)` renders reference leaves.

    Concatenation is printed with spaces around `&`, arithmetic tightly.
    The right operand of a binary operator is parenthesized whenever its
    precedence is not higher, so parsing the output rebuilds the same tree.
    """

    def go(node: Formula, parent_prec: int, right: bool) -> str:
        if isinstance(node, Num):
            return format_number(node.value)
        if isinstance(node, Str):
            return quote_string(node.value)
        if isinstance(node, NameRef):
            return node.name
        if isinstance(node, (ElementRef, CellRef, RangeRef, OffsetRef)):
            return atom(node)
        if isinstance(node, Neg):
            inner = go(node.operand, 5, True)
            if inner.startswith("-"):  # avoid the -- digraph
                inner = "(" + inner + ")"
            return "-" + inner
        if isinstance(node, Call):
            args = ", ".join(go(a, 0, False) for a in node.args)
            return f"{node.name}({args})"
        if isinstance(node, BinOp):
            prec = _PREC[node.op]
            sep = f" {node.op} " if node.op == "&" else node.op
            rhs = go(node.right, prec, True)
            if node.op == "-" and rhs.startswith("-"):
                rhs = "(" + rhs + ")"
            text = go(node.left, prec, False) + sep + rhs
            if prec < parent_prec or (prec == parent_prec and right):
                return "(" + text + ")"
            return text
        raise ModelError(f"cannot format {node!r}")

    return go(f, 0, False)


def walk(f: Formula):
    """Yield every node of a formula tree, outermost first."""
    yield f
    if isinstance(f, BinOp):
        yield from walk(f.left)
        yield from walk(f.right)
    elif isinstance(f, Neg):
        yield from walk(f.operand)
    elif isinstance(f, Call):
        for a in f.args:
            yield from walk(a)
    elif isinstance(f, RangeRef):
        yield f.start
        yield f.end


def map_refs(f: Formula, fn) -> Formula:
    """Rebuild a tree with `fn` applied to ElementRef/CellRef/RangeRef leaves."""
    if isinstance(f, (ElementRef, CellRef, RangeRef, OffsetRef)):
        return fn(f)
    if isinstance(f, BinOp):
        return BinOp(f.op, map_refs(f.left, fn), map_refs(f.right, fn))
    if isinstance(f, Neg):
        return Neg(map_refs(f.operand, fn))
    if isinstance(f, Call):
        return Call(f.name, tuple(map_refs(a, fn) for a in f.args))
    return f


# --------------------------------------------------------------------------
# tables, equations, objects

@dataclass(frozen=True, slots=True)
class Bounds:
    """Inclusive integer range of one table dimension."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ModelError(f"empty bounds {self.lo}:{self.hi}")

    @property
    def extent(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, i: int) -> bool:
        return self.lo <= i <= self.hi


@dataclass(frozen=True, slots=True)
class TableDecl:
    """A named table with zero or more dimensions; zero dims is a scalar."""

    name: str
    dims: tuple[Bounds, ...] = ()

    @property
    def element_count(self) -> int:
        n = 1
        for b in self.dims:
            n *= b.extent
        return n


@dataclass(frozen=True, slots=True)
class Quantifier:
    """A variable ranging over one lhs dimension, optionally constrained.

    `op` is one of all > < = >= <=; `bound` is the constraint constant.
    """

    var: str
    op: str = "all"
    bound: int | None = None

    def effective(self, dim: Bounds) -> tuple[int, int]:
        """Dimension bounds intersected with the constraint (may be empty)."""
        lo, hi = dim.lo, dim.hi
        if self.op == "all":
            return lo, hi
        k = self.bound
        if self.op == ">":
            return max(lo, k + 1), hi
        if self.op == ">=":
            return max(lo, k), hi
        if self.op == "<":
            return lo, min(hi, k - 1)
        if self.op == "<=":
            return lo, min(hi, k)
        if self.op == "=":
            return max(lo, k), min(hi, k)
        raise ModelError(f"unknown quantifier op {self.op!r}")


LhsIndex = int | Quantifier


@dataclass(frozen=True, slots=True)
class Equation:
    """lhs table element(s) = rhs formula.  lhs indices are literals or
    quantifiers; every variable used on the rhs must be bound on the lhs."""

    lhs_table: str
    lhs_indices: tuple[LhsIndex, ...]
    rhs: Formula

    def variables(self) -> tuple[str, ...]:
        return tuple(q.var for q in self.lhs_indices if isinstance(q, Quantifier))

    def canon(self) -> "Equation":
        """Rename quantified variables positionally so alpha-equivalent
        equations compare equal."""
        names = {}
        lhs = []
        for ix in self.lhs_indices:
            if isinstance(ix, Quantifier):
                names[ix.var] = f"_v{len(names)}"
                lhs.append(Quantifier(names[ix.var], ix.op, ix.bound))
            else:
                lhs.append(ix)

        def rename(f: Formula) -> Formula:
            if isinstance(f, ElementRef):
                return ElementRef(
                    f.table,
                    tuple(
                        Index(names.get(ix.var, ix.var), ix.offset) for ix in f.indices
                    ),
                )
            if isinstance(f, NameRef):
                return NameRef(names.get(f.name, f.name))
            if isinstance(f, BinOp):
                return BinOp(f.op, rename(f.left), rename(f.right))
            if isinstance(f, Neg):
                return Neg(rename(f.operand))
            if isinstance(f, Call):
                return Call(f.name, tuple(rename(a) for a in f.args))
            return f

        return Equation(self.lhs_table, tuple(lhs), rename(self.rhs))


class Object:
    """A set of table declarations plus a set of equations.

    Declaration order is irrelevant: tables are kept sorted by name and
    equations deduplicated modulo renaming of quantified variables, so two
    objects are equal exactly when they mean the same thing.
    """

    __slots__ = ("tables", "equations", "_canon")

    def __init__(self, tables, equations):
        by_name: dict[str, TableDecl] = {}
        for t in tables:
            if t.name in by_name and by_name[t.name] != t:
                raise ModelError(f"table {t.name!r} declared twice with different shape")
            by_name[t.name] = t
        self.tables: dict[str, TableDecl] = dict(sorted(by_name.items()))

        seen: dict[Equation, Equation] = {}
        for eq in equations:
            self._check_equation(eq)
            key = eq.canon()
            if key not in seen:
                seen[key] = eq
        ordered = sorted(seen.items(), key=lambda kv: _eq_sort_key(kv[0]))
        self.equations: tuple[Equation, ...] = tuple(eq for _, eq in ordered)
        self._canon = frozenset(seen)

    def _check_equation(self, eq: Equation) -> None:
        decl = self.tables.get(eq.lhs_table)
        if decl is None:
            raise ModelError(f"equation defines undeclared table {eq.lhs_table!r}")
        if len(eq.lhs_indices) != len(decl.dims):
            raise ModelError(
                f"{eq.lhs_table} has {len(decl.dims)} dimensions, "
                f"equation uses {len(eq.lhs_indices)} indices"
            )
        bound = set(eq.variables())
        if len(bound) != len(eq.variables()):
            raise ModelError(f"duplicate quantifier variable in {eq.lhs_table} equation")
        for node in walk(eq.rhs):
            if isinstance(node, ElementRef):
                if node.table not in self.tables:
                    raise ModelError(f"equation references undeclared table {node.table!r}")
                if len(node.indices) != len(self.tables[node.table].dims):
                    raise ModelError(
                        f"reference {node.table}[...] has wrong number of indices"
                    )
                for ix in node.indices:
                    if ix.var is not None and ix.var not in bound:
                        raise ModelError(f"unbound variable {ix.var!r} in rhs")
            elif isinstance(node, NameRef):
                if node.name not in bound:
                    raise ModelError(f"unbound name {node.name!r} in rhs")
            elif isinstance(node, CellRef):
                if node.sheet is None:
                    raise ModelError(
                        "cell references in model equations must name their sheet")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Object)
            and self.tables == other.tables
            and self._canon == other._canon
        )

    def __hash__(self) -> int:
        return hash((tuple(self.tables.items()), self._canon))

    def __repr__(self) -> str:
        return f"Object({len(self.tables)} tables, {len(self.equations)} equations)"


def _eq_sort_key(eq: Equation):
    return (eq.lhs_table, repr(eq.lhs_indices), repr(eq.rhs))


EMPTY_OBJECT = Object((), ())


# --------------------------------------------------------------------------
# workbooks

Cell = float | str | Formula
"""A workbook cell: literal number, literal text, or a sheet-space formula."""


class Workbook:
    """Sheets of addressed cells.  Sheet order is insertion order and is
    significant; within a sheet, cells live in a (col, row) -> Cell map."""

    __slots__ = ("sheets",)

    def __init__(self):
        self.sheets: dict[str, dict[tuple[int, int], Cell]] = {}

    def add_sheet(self, name: str) -> None:
        self.sheets.setdefault(name, {})

    def put(self, addr: CellAddr, cell: Cell) -> None:
        grid = self.sheets.setdefault(addr.sheet, {})
        key = (addr.col, addr.row)
        if key in grid:
            raise ModelError(f"two cells share address {a1_format(addr)}")
        grid[key] = cell

    def cell(self, addr: CellAddr) -> Cell | None:
        grid = self.sheets.get(addr.sheet)
        if grid is None:
            return None
        return grid.get((addr.col, addr.row))

    def cells(self):
        """Yield (CellAddr, Cell) over all sheets in sheet order."""
        for sheet, grid in self.sheets.items():
            for (col, row), cell in grid.items():
                yield CellAddr(sheet, col, row), cell

    def copy(self) -> "Workbook":
        w = Workbook()
        for sheet, grid in self.sheets.items():
            w.sheets[sheet] = dict(grid)
        return w

    def __len__(self) -> int:
        return sum(len(g) for g in self.sheets.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Workbook):
            return NotImplemented
        return list(self.sheets.items()) == list(other.sheets.items())

    def __hash__(self):
        raise TypeError("Workbook is not hashable")

    def __repr__(self) -> str:
        return f"Workbook({', '.join(self.sheets)})"

"""Cross-tabulation generator: build a value-combiner column and a
COUNTIF table from two columns of flat data, and insert both into a
workbook without touching its existing cells."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import MapEntry, MappingSpec, map_table
from .errors import CrosstabError, Diagnostic
from .evaluator import evaluate
from .model import (
    BinOp, Bounds, Call, CellAddr, CellRef, Equation, Num, Object, Quantifier,
    RangeRef, Str, TableDecl, Workbook, col_number, format_number,
    parse_cell_addr,
)


@dataclass(frozen=True, slots=True)
class CrosstabSpec:
    source_sheet: str
    header_row: int
    data_rows: Bounds
    dim_columns: tuple[int, ...]  # exactly two supported
    combiner_sheet: str
    result_sheet: str
    result_anchor: CellAddr

    def __post_init__(self):
        if len(self.dim_columns) != 2:
            raise CrosstabError(
                f"exactly two dimension columns are supported, got "
                f"{len(self.dim_columns)}")
        if len(set(self.dim_columns)) != 2:
            raise CrosstabError("dimension columns must be distinct")


def parse_spec(text: str) -> CrosstabSpec:
    """key=value lines: source_sheet, header_row, rows, dims, result_anchor,
    and optionally combiner_sheet (default Combine)."""
    fields: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise Diagnostic(f"expected key=value, got {raw!r}", n, 1)
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    missing = {"source_sheet", "header_row", "rows", "dims", "result_anchor"} - set(fields)
    if missing:
        raise CrosstabError(f"crosstab spec is missing {', '.join(sorted(missing))}")

    m = re.fullmatch(r"(\d+)\s*:\s*(\d+)", fields["rows"])
    if m is None:
        raise CrosstabError(f"rows must look like 2:25, got {fields['rows']!r}")
    rows = Bounds(int(m.group(1)), int(m.group(2)))

    def column(token: str) -> int:
        token = token.strip()
        if token.isdigit():
            return int(token)
        if re.fullmatch(r"[A-Za-z]{1,3}", token):
            return col_number(token)
        raise CrosstabError(f"bad column {token!r} in dims")

    dims = tuple(column(t) for t in fields["dims"].split(","))
    anchor = parse_cell_addr(fields["result_anchor"])
    return CrosstabSpec(
        source_sheet=fields["source_sheet"],
        header_row=int(fields["header_row"]),
        data_rows=rows,
        dim_columns=dims,
        combiner_sheet=fields.get("combiner_sheet", "Combine"),
        result_sheet=anchor.sheet,
        result_anchor=anchor,
    )


# --------------------------------------------------------------------------
# steps of the algorithm

def unique_sorted_values(w: Workbook, sheet: str, column: int, rows: Bounds) -> list[str]:
    """Values in the range, duplicates removed, ascending alphabetical."""
    seen: set[str] = set()
    for r in range(rows.lo, rows.hi + 1):
        cell = w.cell(CellAddr(sheet, column, r))
        if cell is None:
            continue
        if isinstance(cell, (int, float)):
            seen.add(format_number(cell))
        elif isinstance(cell, str):
            seen.add(cell)
        else:
            raise CrosstabError(
                f"dimension column {column} holds a formula at row {r}; "
                "literal values are required")
    return sorted(seen)


def build_combiner(w: Workbook, spec: CrosstabSpec) -> tuple[Object, MappingSpec]:
    """One concatenation formula per data row, pairing the two dimension
    values with `_` separators, laid out down column A of the combiner sheet."""
    n = spec.data_rows.extent
    table = TableDecl("Combiner", (Bounds(1, n),))
    equations = []
    c1, c2 = spec.dim_columns
    for k in range(1, n + 1):
        row = spec.data_rows.lo + k - 1
        rhs = BinOp(
            "&",
            BinOp(
                "&",
                BinOp(
                    "&",
                    CellRef(spec.source_sheet, c1, row, True, True),
                    Str("_"),
                ),
                CellRef(spec.source_sheet, c2, row, True, True),
            ),
            Str("_"),
        )
        equations.append(Equation("Combiner", (k,), rhs))
    mapping = MappingSpec([
        MapEntry("Combiner", CellAddr(spec.combiner_sheet, 1, 1), "y")])
    return Object([table], equations), mapping


def build_crosstab(
    values1: list[str], values2: list[str], combiner_range: RangeRef
) -> Object:
    """The counts table: first dimension runs over the second column's
    values (down), second over the first column's (across), each cell a
    COUNTIF against the combiner range; header tables come alongside."""
    if not values1 or not values2:
        raise CrosstabError("both dimensions need at least one value")
    counts = TableDecl("Counts", (Bounds(1, len(values2)), Bounds(1, len(values1))))
    col_hdr = TableDecl("ColHeaders", (Bounds(1, len(values1)),))
    row_hdr = TableDecl("RowHeaders", (Bounds(1, len(values2)),))
    equations = []
    for j, v1 in enumerate(values1, start=1):
        equations.append(Equation("ColHeaders", (j,), Str(v1)))
    for i, v2 in enumerate(values2, start=1):
        equations.append(Equation("RowHeaders", (i,), Str(v2)))
    for i, v2 in enumerate(values2, start=1):
        for j, v1 in enumerate(values1, start=1):
            equations.append(Equation(
                "Counts", (i, j),
                Call("COUNTIF", (combiner_range, Str(f"{v1}_{v2}_")))))
    return Object([counts, col_hdr, row_hdr], equations)


def insert_crosstab(source: Workbook, spec: CrosstabSpec) -> Workbook:
    """Add the combiner sheet and the result table to a copy of the source
    workbook; every original cell is left untouched."""
    for sheet in (spec.combiner_sheet, spec.result_sheet):
        if source.sheets.get(sheet):
            raise CrosstabError(
                f"target sheet {sheet!r} already holds cells; refusing to overwrite")
    if spec.source_sheet not in source.sheets:
        raise CrosstabError(f"source sheet {spec.source_sheet!r} not found")
    for col in spec.dim_columns:
        if not any(
            source.cell(CellAddr(spec.source_sheet, col, r)) is not None
            for r in range(spec.data_rows.lo, spec.data_rows.hi + 1)
        ):
            raise CrosstabError(f"dimension column {col} holds no data")

    values1 = unique_sorted_values(source, spec.source_sheet,
                                   spec.dim_columns[0], spec.data_rows)
    values2 = unique_sorted_values(source, spec.source_sheet,
                                   spec.dim_columns[1], spec.data_rows)
    combiner, combiner_map = build_combiner(source, spec)
    n = spec.data_rows.extent
    combiner_range = RangeRef(
        CellRef(spec.combiner_sheet, 1, 1, True, True),
        CellRef(spec.combiner_sheet, 1, n, True, True),
    )
    table = build_crosstab(values1, values2, combiner_range)
    a = spec.result_anchor
    table_map = MappingSpec([
        MapEntry("ColHeaders", CellAddr(a.sheet, a.col + 1, a.row), "x"),
        MapEntry("RowHeaders", CellAddr(a.sheet, a.col, a.row + 1), "y"),
        MapEntry("Counts", CellAddr(a.sheet, a.col + 1, a.row + 1), "yx"),
    ])

    out = source.copy()
    for fragment in (map_table(combiner, combiner_map), map_table(table, table_map)):
        for addr, cell in fragment.cells():
            out.put(addr, cell)
    return out


def pair_counts(w: Workbook, spec: CrosstabSpec) -> dict[tuple[str, str], int]:
    """Brute-force co-occurrence counts straight from the source rows; the
    oracle the generated COUNTIF table must agree with."""
    values = evaluate(w)
    counts: dict[tuple[str, str], int] = {}
    c1, c2 = spec.dim_columns
    for r in range(spec.data_rows.lo, spec.data_rows.hi + 1):
        v1 = values.get(CellAddr(spec.source_sheet, c1, r))
        v2 = values.get(CellAddr(spec.source_sheet, c2, r))
        if v1 is None and v2 is None:
            continue
        key = (_as_text(v1), _as_text(v2))
        counts[key] = counts.get(key, 0) + 1
    return counts


def _as_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format_number(v)
    return str(v)

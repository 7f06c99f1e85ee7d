"""Shared fixtures: the mini stock model, alternate layouts for it, the
24-row expenses workbook, and random-value generators used as oracles."""
from __future__ import annotations

import random
import re

import pytest

from sheetforge import build, notation
from sheetforge.algebra import ExpandedObject
from sheetforge.model import (
    BinOp, Bounds, Call, CellAddr, CellRef, ElementRef, Index, Num, Str,
    TableDecl, Workbook,
)

# A small housing-stock model: three core tables, a running-total table and
# a per-year total, all sizes driven by three parameters.  Values are seeded
# through recurrences so every element is distinct.
MINI_MODEL_DEF = """
let stock(StartYear, EndYear, Types) be
{#
  Builds[StartYear:EndYear, 1:Types],
  Demolitions[StartYear:EndYear, 1:Types],
  NewStock[StartYear:EndYear, 1:Types],
  TotalNew[StartYear:EndYear, 1:Types],
  GrandTotal[StartYear:EndYear]
|
  Builds[StartYear, 1] = 95,
  Builds[StartYear, dt>1] = Builds[StartYear, dt-1] + 7,
  Builds[y>StartYear, all dt] = Builds[y-1, dt] + 3,
  Demolitions[StartYear, 1] = 20,
  Demolitions[StartYear, dt>1] = Demolitions[StartYear, dt-1] + 2,
  Demolitions[y>StartYear, all dt] = Demolitions[y-1, dt] + 1,
  NewStock[StartYear, all dt] = Builds[StartYear, dt] - Demolitions[StartYear, dt],
  NewStock[y>StartYear, all dt] = NewStock[y-1, dt] + Builds[y, dt] - Demolitions[y, dt],
  TotalNew[all y, 1] = NewStock[y, 1],
  TotalNew[all y, dt>1] = TotalNew[y, dt-1] + NewStock[y, dt],
  GrandTotal[all y] = TotalNew[y, Types]
#}
"""

MINI_MODEL_WITH_LAYOUT = MINI_MODEL_DEF + """
grid( [ [ 'STOCK MODEL' ]
      , [ skip(0,1) ]
      , [ 'Builds', skip, 'Demolitions', skip, 'NewStock', skip, 'TotalNew', skip, 'GrandTotal' ]
      , [ Builds by yx, skip, Demolitions by yx, skip, NewStock by yx, skip, TotalNew by yx, skip, GrandTotal by y ]
      ] ) @ Model!A1
"""

LAYOUT_ORIGINAL = {
    "Model": (
        "STOCK MODEL\n"
        "\n"
        "Builds,,Demolitions,,NewStock,,TotalNew,,GrandTotal\n"
        "Builds yx,skip,Demolitions yx,skip,NewStock yx,skip,TotalNew yx,skip,GrandTotal y\n"
    ),
}

LAYOUT_FLIPPED = {
    "Model": (
        "STOCK MODEL\n"
        "\n"
        "Builds,,Demolitions,,NewStock,,TotalNew,,GrandTotal\n"
        "Builds xy,skip,Demolitions xy,skip,NewStock xy,skip,TotalNew xy,skip,GrandTotal x\n"
    ),
}

LAYOUT_SPLIT = {
    "Inputs": (
        "Builds,,Demolitions\n"
        "Builds yx,skip,Demolitions yx\n"
    ),
    "Calc": (
        "NewStock\n"
        "NewStock yx\n"
    ),
    "Out": (
        "TotalNew,,GrandTotal\n"
        "TotalNew yx,skip,GrandTotal y\n"
    ),
}

LAYOUT_MERGED = {
    "One": (
        "Builds\n"
        "Builds yx\n"
        "Demolitions\n"
        "Demolitions yx\n"
        "NewStock\n"
        "NewStock yx\n"
        "TotalNew\n"
        "TotalNew yx\n"
        "GrandTotal\n"
        "GrandTotal x\n"
    ),
}

ALL_LAYOUTS = (LAYOUT_ORIGINAL, LAYOUT_FLIPPED, LAYOUT_SPLIT, LAYOUT_MERGED)

# reconstruction of the pivot-table teaching sheet: Who/Week/What/Amount
# over 24 data rows; the first and last rows match the published fragment
EXPENSES_ROWS = [
    ("Joe", 3, "Beer", 18), ("Beth", 4, "Food", 17), ("Janet", 5, "Beer", 14),
    ("Joe", 4, "Beer", 12), ("Beth", 3, "Car", 25), ("Joe", 5, "Food", 9),
    ("Janet", 3, "Car", 11), ("Joe", 3, "Food", 16), ("Beth", 5, "Beer", 21),
    ("Janet", 4, "Beer", 13), ("Joe", 4, "Car", 40), ("Beth", 3, "Food", 15),
    ("Janet", 3, "Beer", 7), ("Joe", 5, "Beer", 22), ("Beth", 4, "Beer", 19),
    ("Janet", 4, "Food", 8), ("Joe", 3, "Beer", 10), ("Beth", 5, "Beer", 30),
    ("Joe", 4, "Food", 28), ("Janet", 5, "Beer", 6), ("Joe", 5, "Beer", 24),
    ("Beth", 3, "Beer", 5), ("Janet", 4, "Car", 17), ("Janet", 5, "Food", 12),
]

EXPENSES_SPEC_TEXT = """\
source_sheet=Sheet1
header_row=1
rows=2:25
dims=A,C
result_anchor=Xtab!A1
"""


@pytest.fixture
def mini_program():
    return notation.parse_program(MINI_MODEL_DEF)


@pytest.fixture
def mini_compiled(mini_program):
    return build.compile_program(mini_program, [2000, 2010, 5], LAYOUT_ORIGINAL)


@pytest.fixture
def mini_workbook(mini_compiled):
    return build.compile_workbook(mini_compiled)


@pytest.fixture
def expenses_workbook():
    w = Workbook()
    for c, h in enumerate(("Who", "Week", "What", "Amount"), start=1):
        w.put(CellAddr("Sheet1", c, 1), h)
    for r, (who, week, what, amount) in enumerate(EXPENSES_ROWS, start=2):
        w.put(CellAddr("Sheet1", 1, r), who)
        w.put(CellAddr("Sheet1", 2, r), float(week))
        w.put(CellAddr("Sheet1", 3, r), what)
        w.put(CellAddr("Sheet1", 4, r), float(amount))
    return w


# --------------------------------------------------------------------------
# random generators shared by property-ish tests and the acceptance suite

def random_workbook(rng: random.Random) -> Workbook:
    w = Workbook()
    sheets = [f"S{i}" for i in range(rng.randint(1, 2))]
    for sheet in sheets:
        w.add_sheet(sheet)
    for sheet in sheets:
        for _ in range(rng.randint(1, 12)):
            addr = CellAddr(sheet, rng.randint(1, 8), rng.randint(1, 8))
            if w.cell(addr) is not None:
                continue
            kind = rng.random()
            if kind < 0.4:
                w.put(addr, rng.choice([0.0, 1.0, -3.5, 42.0, 2.25, 1e6]))
            elif kind < 0.6:
                w.put(addr, rng.choice(["", "x", "two words", 'a"b', "Beer_"]))
            else:
                w.put(addr, _random_sheet_formula(rng, sheets))
    return w


def _random_sheet_formula(rng: random.Random, sheets: list[str], depth: int = 0):
    if depth >= 2 or rng.random() < 0.4:
        pick = rng.random()
        if pick < 0.4:
            return Num(float(rng.randint(-50, 50)))
        if pick < 0.55:
            return Str(rng.choice(["a", "b_", "spam"]))
        sheet = rng.choice([None] + sheets)
        return CellRef(sheet, rng.randint(1, 8), rng.randint(1, 8),
                       rng.random() < 0.5, rng.random() < 0.5)
    pick = rng.random()
    if pick < 0.6:
        op = rng.choice(["+", "-", "*", "/", "&", "=", "<", ">="])
        return BinOp(op, _random_sheet_formula(rng, sheets, depth + 1),
                     _random_sheet_formula(rng, sheets, depth + 1))
    if pick < 0.75:
        from sheetforge.model import Neg
        inner = _random_sheet_formula(rng, sheets, depth + 1)
        return Num(-inner.value) if isinstance(inner, Num) else Neg(inner)
    if pick < 0.9:
        name = rng.choice(["SUM", "MIN", "MAX"])
        a = CellRef(None, rng.randint(1, 4), rng.randint(1, 4), True, True)
        b = CellRef(None, a.col + rng.randint(0, 2), a.row + rng.randint(0, 2),
                    True, True)
        from sheetforge.model import RangeRef
        return Call(name, (RangeRef(a, b),))
    return Call("IF", (_random_sheet_formula(rng, sheets, depth + 1),
                       _random_sheet_formula(rng, sheets, depth + 1),
                       _random_sheet_formula(rng, sheets, depth + 1)))


def random_expanded_object(rng: random.Random) -> ExpandedObject:
    tables: dict[str, TableDecl] = {}
    for i in range(rng.randint(1, 3)):
        ndims = rng.randint(0, 2)
        dims = tuple(
            Bounds(lo, lo + rng.randint(0, 3))
            for lo in (rng.randint(-2, 3) for _ in range(ndims))
        )
        tables[f"t{i}"] = TableDecl(f"t{i}", dims)

    def random_index(decl: TableDecl) -> tuple[int, ...]:
        return tuple(rng.randint(b.lo, b.hi) for b in decl.dims)

    def random_formula(depth: int = 0):
        pick = rng.random()
        if depth >= 2 or pick < 0.35:
            choice = rng.random()
            if choice < 0.5:
                return Num(float(rng.randint(-9, 9)))
            if choice < 0.7:
                return Str(rng.choice(["cap", "note", "x_"]))
            if choice < 0.85:
                target = tables[rng.choice(sorted(tables))]
                return ElementRef(
                    target.name,
                    tuple(Index(None, i) for i in random_index(target)))
            return CellRef("Raw", rng.randint(1, 5), rng.randint(1, 5),
                           rng.random() < 0.5, rng.random() < 0.5)
        if pick < 0.8:
            op = rng.choice(["+", "-", "*", "&"])
            return BinOp(op, random_formula(depth + 1), random_formula(depth + 1))
        return Call("SUM", (random_formula(depth + 1), random_formula(depth + 1)))

    cells = {}
    for name, decl in tables.items():
        import itertools
        all_indices = list(itertools.product(*(range(b.lo, b.hi + 1) for b in decl.dims)))
        keep = rng.random()
        for idx in all_indices:
            if rng.random() <= keep:
                cells[(name, idx)] = random_formula()
    return ExpandedObject(tables, cells)


# --------------------------------------------------------------------------
# raw-byte audit of emitted cell order

_ROW_SPLIT = re.compile(rb"<Row ")
_ROW_INDEX = re.compile(rb'^ss:Index="(\d+)"')
_CELL_INDEX = re.compile(rb'<Cell ss:Index="(\d+)"')


def xml_cells_sorted(data: bytes) -> bool:
    """True iff every sheet's cells appear strictly ascending by (row, col),
    judged from the raw bytes alone."""
    for sheet_chunk in data.split(b"<Worksheet")[1:]:
        last_row = 0
        for row_chunk in _ROW_SPLIT.split(sheet_chunk)[1:]:
            m = _ROW_INDEX.match(row_chunk)
            if m is None:
                return False
            row = int(m.group(1))
            if row <= last_row:
                return False
            last_row = row
            last_col = 0
            for cm in _CELL_INDEX.finditer(row_chunk):
                col = int(cm.group(1))
                if col <= last_col:
                    return False
                last_col = col
    return True

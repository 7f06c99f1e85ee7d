"""The format engine: rows and grids of items with measurement, alignment
and padding; compiling formats to a mapping plus literal text cells; and
the visual layout-sheet form."""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import notation
from .algebra import MapEntry, MappingSpec, table_extent
from .errors import LayoutError
from .model import CellAddr, TableDecl

_PLACEMENT_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s+(yx|xy|y|x)\s*$")
_SKIP_RE = re.compile(r"^\s*skip\s*(?:\(\s*(\d+)\s*,\s*(\d+)\s*\))?\s*$")


# --------------------------------------------------------------------------
# items and formats

@dataclass(frozen=True, slots=True)
class TablePlacement:
    table: str
    orient: str


@dataclass(frozen=True, slots=True)
class Text:
    text: str


@dataclass(frozen=True, slots=True)
class Skip:
    w: int = 1
    h: int = 0

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise LayoutError(f"skip({self.w},{self.h}) has a negative extent")


Item = TablePlacement | Text | Skip


@dataclass(frozen=True, slots=True)
class GridFormat:
    """Nested rows of items anchored at a cell; `row(items)` is a one-row grid."""

    rows: tuple[tuple[Item, ...], ...]
    anchor: CellAddr


@dataclass(frozen=True, slots=True)
class Placement:
    item: Item
    origin: CellAddr
    width: int
    height: int


def measure(item: Item, tables: dict[str, TableDecl]) -> tuple[int, int]:
    """(width, height) of an item in cells."""
    if isinstance(item, Text):
        return 1, 1
    if isinstance(item, Skip):
        return item.w, item.h
    decl = tables.get(item.table)
    if decl is None:
        raise LayoutError(f"layout places undeclared table {item.table!r}")
    ndims = len(decl.dims)
    if ndims > 2:
        raise LayoutError(
            f"table {item.table!r} has {ndims} dimensions; grid layout handles at most 2")
    want = {0: ("",), 1: ("y", "x"), 2: ("yx", "xy")}[ndims]
    if ndims and item.orient not in want:
        raise LayoutError(
            f"orientation {item.orient!r} does not fit {ndims}-dimensional "
            f"table {item.table!r}")
    return table_extent(decl, item.orient)


def layout_grid(g: GridFormat, tables: dict[str, TableDecl]) -> list[Placement]:
    """Place every item.  Tops of items in a row are aligned and the row is as
    deep as its deepest item; left edges in a column are aligned and the
    column as wide as its widest item."""
    ncols = max((len(r) for r in g.rows), default=0)
    sizes = [[measure(item, tables) for item in row] for row in g.rows]

    col_w = [0] * ncols
    row_h = [0] * len(g.rows)
    for r, row in enumerate(sizes):
        for c, (w, h) in enumerate(row):
            col_w[c] = max(col_w[c], w)
            row_h[r] = max(row_h[r], h)

    placements: list[Placement] = []
    y = g.anchor.row
    for r, row in enumerate(g.rows):
        x = g.anchor.col
        for c, item in enumerate(row):
            w, h = sizes[r][c]
            placements.append(Placement(item, CellAddr(g.anchor.sheet, x, y), w, h))
            x += col_w[c]
        y += row_h[r]
    return placements


def placements_to_mapping(
    placements: list[Placement],
) -> tuple[MappingSpec, dict[CellAddr, str]]:
    """Table placements become mapping entries, text items become literal
    cells; skips contribute nothing."""
    spec = MappingSpec()
    texts: dict[CellAddr, str] = {}
    for p in placements:
        if isinstance(p.item, TablePlacement):
            spec.add(MapEntry(p.item.table, p.origin, p.item.orient))
        elif isinstance(p.item, Text):
            if p.origin in texts:
                raise LayoutError(f"two text items at {p.origin}")
            texts[p.origin] = p.item.text
    return spec, texts


def check_tables_placed(tables: dict[str, TableDecl], spec: MappingSpec) -> None:
    """Every declared table must appear in some layout."""
    missing = [name for name in tables if name not in spec]
    if missing:
        raise LayoutError(
            "tables declared in the model but absent from every layout: "
            + ", ".join(sorted(missing))
        )


# --------------------------------------------------------------------------
# visual form: a sheet of cell texts depicting a grid format

def classify_cell(text: str, tables: dict[str, TableDecl]) -> Item:
    """One layout-sheet cell: `name orientation` places a table, `skip`
    forms make skips, any other text is a literal, blanks are 1x1 skips."""
    if text.startswith("'"):  # Excel's text-cell marker
        text = text[1:]
    if text.strip() == "":
        return Skip(1, 1)
    m = _SKIP_RE.match(text)
    if m:
        if m.group(1) is None:
            return Skip(1, 0)
        return Skip(int(m.group(1)), int(m.group(2)))
    m = _PLACEMENT_RE.match(text)
    if m:
        name, orient = m.groups()
        if name not in tables:
            raise LayoutError(
                f"layout places table {name!r} which the model does not declare")
        return TablePlacement(name, orient)
    return Text(text.strip())


def parse_layout_sheet(
    cells: list[list[str]], tables: dict[str, TableDecl], sheet: str
) -> GridFormat:
    """A layout sheet depicts one target sheet's grid, anchored at its A1."""
    rows = tuple(
        tuple(classify_cell(cell, tables) for cell in row) for row in cells
    )
    return GridFormat(rows, CellAddr(sheet, 1, 1))


def format_item(item: Item) -> str:
    """Inverse of classify_cell, for writing layout sheets."""
    if isinstance(item, TablePlacement):
        return f"{item.table} {item.orient}"
    if isinstance(item, Text):
        return item.text
    if item == Skip(1, 1):
        return ""
    return f"skip({item.w},{item.h})"


# --------------------------------------------------------------------------
# folding parsed formats

def fold_format(fmt: notation.FormatT, env: dict[str, int]) -> GridFormat:
    anchor = notation.fold_addr(fmt.anchor, env)
    rows = []
    for row in fmt.rows:
        items: list[Item] = []
        for it in row:
            if isinstance(it, notation.TextT):
                items.append(Text(it.text))
            elif isinstance(it, notation.SkipT):
                items.append(Skip(notation.fold_int(it.w, env, "skip"),
                                  notation.fold_int(it.h, env, "skip")))
            else:
                items.append(TablePlacement(it.table, it.orient))
        rows.append(tuple(items))
    return GridFormat(tuple(rows), anchor)


# --------------------------------------------------------------------------
# reconstructing a grid from known placements (structure discovery)

def grid_from_placements(
    sheet: str, placed: list[tuple[CellAddr, int, int, Item]]
) -> list[list[Item]]:
    """Build a layout sheet whose flowed positions reproduce the given ones.

    Works when the items are band-decomposable: every item fits between its
    origin column/row and the next item origin in that direction, which holds
    for any sheet that was itself produced by a single grid format.
    """
    if not placed:
        return []
    col_cuts = sorted({a.col for a, _, _, _ in placed} | {1})
    row_cuts = sorted({a.row for a, _, _, _ in placed} | {1})
    col_band = {c: i for i, c in enumerate(col_cuts)}
    row_band = {r: i for i, r in enumerate(row_cuts)}

    def band_gap(cuts: list[int], i: int) -> int | None:
        return None if i + 1 >= len(cuts) else cuts[i + 1] - cuts[i]

    ncols, nrows = len(col_cuts), len(row_cuts)
    grid: list[list[Item | None]] = [[None] * ncols for _ in range(nrows)]
    for addr, w, h, item in placed:
        bc, br = col_band[addr.col], row_band[addr.row]
        wgap, hgap = band_gap(col_cuts, bc), band_gap(row_cuts, br)
        if (wgap is not None and w > wgap) or (hgap is not None and h > hgap):
            raise LayoutError(
                f"cannot depict sheet {sheet!r} as a grid: item at "
                f"{addr} spans past the next item's origin")
        if grid[br][bc] is not None:
            raise LayoutError(f"two items share origin {addr}")
        grid[br][bc] = item

    # Fillers pin every band to its exact extent without occupying cells:
    # a final zero-height row of skip(width, 0) and a final zero-width
    # column of skip(0, height).
    out: list[list[Item]] = []
    for br, row in enumerate(grid):
        items = [it if it is not None else Skip(1, 1) for it in row]
        hgap = band_gap(row_cuts, br)
        items.append(Skip(0, hgap if hgap is not None else 1))
        out.append(items)
    filler_row = []
    for bc in range(ncols):
        wgap = band_gap(col_cuts, bc)
        filler_row.append(Skip(wgap if wgap is not None else 1, 0))
    filler_row.append(Skip(0, 0))
    out.append(filler_row)
    return out

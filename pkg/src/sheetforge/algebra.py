"""The object calculus: union, size instantiation, quantifier expansion,
and the rewrite of table elements onto worksheet cells."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import notation
from .errors import (
    MappingError, ModelError, MultipleDefinitionError, OutOfBoundsError, UnionError,
)
from .model import (
    BinOp, Bounds, Call, CellAddr, CellRef, ElementRef, Equation, Formula,
    Index, NameRef, Neg, Num, Object, Quantifier, RangeRef, Str, TableDecl,
    Workbook, a1_format,
)

# --------------------------------------------------------------------------
# mapping specifications

ORIENT_FOR_DIMS = {0: ("",), 1: ("y", "x"), 2: ("yx", "xy")}


@dataclass(frozen=True, slots=True)
class MapEntry:
    table: str
    origin: CellAddr
    orient: str  # yx | xy | y | x | "" (scalar)


class MappingSpec:
    """One entry per table: worksheet origin plus orientation."""

    __slots__ = ("entries",)

    def __init__(self, entries=()):
        self.entries: dict[str, MapEntry] = {}
        for e in entries:
            self.add(e)

    def add(self, entry: MapEntry) -> None:
        if entry.table in self.entries:
            raise MappingError(f"table {entry.table!r} mapped twice")
        self.entries[entry.table] = entry

    def __contains__(self, table: str) -> bool:
        return table in self.entries

    def __getitem__(self, table: str) -> MapEntry:
        return self.entries[table]

    def __iter__(self):
        return iter(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def check_against(self, tables: dict[str, TableDecl]) -> None:
        for e in self:
            decl = tables.get(e.table)
            if decl is None:
                raise MappingError(f"mapping names unknown table {e.table!r}")
            allowed = ORIENT_FOR_DIMS.get(len(decl.dims))
            if allowed is None or e.orient not in allowed:
                raise MappingError(
                    f"orientation {e.orient!r} does not fit "
                    f"{len(decl.dims)}-dimensional table {e.table!r}"
                )


def element_addr(decl: TableDecl, entry: MapEntry, idx: tuple[int, ...]) -> CellAddr:
    """Cell address of one table element under a mapping entry."""
    o = entry.origin
    if not decl.dims:
        return o
    if len(decl.dims) == 1:
        d = idx[0] - decl.dims[0].lo
        if entry.orient == "y":
            return CellAddr(o.sheet, o.col, o.row + d)
        return CellAddr(o.sheet, o.col + d, o.row)
    d1 = idx[0] - decl.dims[0].lo
    d2 = idx[1] - decl.dims[1].lo
    if entry.orient == "yx":
        return CellAddr(o.sheet, o.col + d2, o.row + d1)
    return CellAddr(o.sheet, o.col + d1, o.row + d2)


def table_extent(decl: TableDecl, orient: str) -> tuple[int, int]:
    """(width, height) of a table on the sheet under an orientation."""
    if not decl.dims:
        return 1, 1
    if len(decl.dims) == 1:
        n = decl.dims[0].extent
        return (1, n) if orient == "y" else (n, 1)
    e1, e2 = decl.dims[0].extent, decl.dims[1].extent
    return (e2, e1) if orient == "yx" else (e1, e2)


def element_at(decl: TableDecl, entry: MapEntry, addr: CellAddr) -> tuple[int, ...] | None:
    """Inverse of element_addr; None when the address is outside the table."""
    if addr.sheet != entry.origin.sheet:
        return None
    dx = addr.col - entry.origin.col
    dy = addr.row - entry.origin.row
    w, h = table_extent(decl, entry.orient)
    if not (0 <= dx < w and 0 <= dy < h):
        return None
    if not decl.dims:
        return ()
    if len(decl.dims) == 1:
        d = dy if entry.orient == "y" else dx
        return (decl.dims[0].lo + d,)
    if entry.orient == "yx":
        return (decl.dims[0].lo + dy, decl.dims[1].lo + dx)
    return (decl.dims[0].lo + dx, decl.dims[1].lo + dy)


# --------------------------------------------------------------------------
# union

def union(a: Object, b: Object) -> Object:
    """Merge table sets (bounds hulled per dimension) and equation sets."""
    tables: dict[str, TableDecl] = dict(a.tables)
    for name, tb in b.tables.items():
        ta = tables.get(name)
        if ta is None:
            tables[name] = tb
            continue
        if len(ta.dims) != len(tb.dims):
            raise UnionError(
                f"table {name!r} has {len(ta.dims)} dimensions on one side "
                f"and {len(tb.dims)} on the other"
            )
        dims = tuple(
            Bounds(min(x.lo, y.lo), max(x.hi, y.hi))
            for x, y in zip(ta.dims, tb.dims)
        )
        tables[name] = TableDecl(name, dims)
    return Object(tables.values(), a.equations + b.equations)


# --------------------------------------------------------------------------
# size instantiation

def eval_obj_expr(
    expr: notation.ObjExpr,
    env: dict[str, int],
    defs: dict[str, notation.FunctionDef],
) -> tuple[Object, list[MapEntry]]:
    """Evaluate an object expression to a concrete Object plus any mapping
    entries contributed by `mapping` clauses."""
    if isinstance(expr, notation.ObjectLit):
        return notation.fold_object(expr, env), []
    if isinstance(expr, notation.CallExpr):
        f = defs.get(expr.name)
        if f is None:
            raise ModelError(f"call of undefined function {expr.name!r}")
        if len(expr.args) != len(f.params):
            raise ModelError(
                f"{f.name} takes {len(f.params)} argument(s), got {len(expr.args)}"
            )
        args = [notation.fold_int(arg, env, f"argument of {f.name}")
                for arg in expr.args]
        return eval_obj_expr(f.body, dict(zip(f.params, args)), defs)
    if isinstance(expr, notation.UnionExpr):
        left, ml = eval_obj_expr(expr.left, env, defs)
        right, mr = eval_obj_expr(expr.right, env, defs)
        return union(left, right), ml + mr
    if isinstance(expr, notation.MappingExpr):
        base, entries = eval_obj_expr(expr.base, env, defs)
        for e in expr.entries:
            if e.table not in base.tables:
                raise MappingError(f"mapping names unknown table {e.table!r}")
            entries.append(MapEntry(e.table, notation.fold_addr(e.addr, env), e.orient))
        return base, entries
    raise ModelError(f"cannot evaluate {expr!r}")


def apply_function(f: notation.FunctionDef, args: list[int],
                   defs: dict[str, notation.FunctionDef] | None = None) -> Object:
    """Instantiate an object-valued function at concrete sizes."""
    if len(args) != len(f.params):
        raise ModelError(f"{f.name} takes {len(f.params)} argument(s), got {len(args)}")
    obj, _ = eval_obj_expr(f.body, dict(zip(f.params, map(int, args))), defs or {f.name: f})
    return obj


# --------------------------------------------------------------------------
# quantifier expansion

@dataclass(frozen=True, slots=True)
class Region:
    """One equation resolved against its table's bounds: a box of index
    tuples, the variable (if any) ranging over each dimension, and the rhs."""

    table: str
    spans: tuple[tuple[int, int], ...]  # inclusive (lo, hi) per dimension
    vars: tuple[str | None, ...]
    rhs: Formula

    @property
    def count(self) -> int:
        n = 1
        for lo, hi in self.spans:
            n *= hi - lo + 1
        return n

    def indices(self):
        return itertools.product(*(range(lo, hi + 1) for lo, hi in self.spans))


class ExpandedObject:
    """Every table element with its single defining concrete formula."""

    __slots__ = ("tables", "cells")

    def __init__(self, tables: dict[str, TableDecl],
                 cells: dict[tuple[str, tuple[int, ...]], Formula]):
        self.tables = tables
        self.cells = cells

    def __eq__(self, other) -> bool:
        return (isinstance(other, ExpandedObject)
                and self.tables == other.tables and self.cells == other.cells)

    def __repr__(self) -> str:
        return f"ExpandedObject({len(self.tables)} tables, {len(self.cells)} cells)"


def expand_regions(o: Object) -> list[Region]:
    """Resolve each equation to its index box; check bounds and conflicts."""
    regions: list[Region] = []
    for eq in o.equations:
        decl = o.tables[eq.lhs_table]
        spans: list[tuple[int, int]] = []
        vars_: list[str | None] = []
        empty = False
        for dim, ix in zip(decl.dims, eq.lhs_indices):
            if isinstance(ix, Quantifier):
                lo, hi = ix.effective(dim)
                if lo > hi:
                    if ix.op == "all":
                        raise ModelError(
                            f"quantifier over empty dimension in {eq.lhs_table}")
                    empty = True
                spans.append((lo, hi))
                vars_.append(ix.var)
            else:
                if ix not in dim:
                    raise OutOfBoundsError(
                        f"index {ix} outside {eq.lhs_table} bounds {dim.lo}:{dim.hi}")
                spans.append((ix, ix))
                vars_.append(None)
        if empty:
            continue
        region = Region(eq.lhs_table, tuple(spans), tuple(vars_), eq.rhs)
        _check_region_refs(o, region)
        regions.append(region)

    by_table: dict[str, list[Region]] = {}
    for r in regions:
        for prev in by_table.get(r.table, ()):
            overlap = _box_intersection(prev.spans, r.spans)
            if overlap is not None:
                raise MultipleDefinitionError(r.table, overlap)
        by_table.setdefault(r.table, []).append(r)
    return regions


def _box_intersection(a, b) -> tuple[int, ...] | None:
    point = []
    for (alo, ahi), (blo, bhi) in zip(a, b):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if lo > hi:
            return None
        point.append(lo)
    return tuple(point)


def _check_region_refs(o: Object, region: Region) -> None:
    """Every rhs element reference stays inside declared bounds for every
    point of the region (offsets are monotone, so corners suffice)."""
    var_span = {v: s for v, s in zip(region.vars, region.spans) if v is not None}
    for node in _walk(region.rhs):
        if isinstance(node, ElementRef):
            target = o.tables.get(node.table)
            if target is None:
                raise ModelError(f"reference to undeclared table {node.table!r}")
            for dim, ix in zip(target.dims, node.indices):
                if ix.var is None:
                    lo = hi = ix.offset
                else:
                    if ix.var not in var_span:
                        raise ModelError(f"unbound variable {ix.var!r} in rhs")
                    vlo, vhi = var_span[ix.var]
                    lo, hi = vlo + ix.offset, vhi + ix.offset
                if lo < dim.lo or hi > dim.hi:
                    raise OutOfBoundsError(
                        f"{node.table}[...{lo if lo < dim.lo else hi}...] is outside "
                        f"bounds {dim.lo}:{dim.hi} of {node.table}"
                    )
        elif isinstance(node, NameRef):
            if node.name not in var_span:
                raise ModelError(f"unbound name {node.name!r} in rhs")


def _walk(f: Formula):
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, BinOp):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Call):
            stack.extend(node.args)


def instantiate(rhs: Formula, env: dict[str, int]) -> Formula:
    """Substitute concrete values for quantified variables."""
    if isinstance(rhs, ElementRef):
        return ElementRef(
            rhs.table,
            tuple(
                ix if ix.var is None else Index(None, env[ix.var] + ix.offset)
                for ix in rhs.indices
            ),
        )
    if isinstance(rhs, NameRef):
        return Num(float(env[rhs.name]))
    if isinstance(rhs, BinOp):
        return BinOp(rhs.op, instantiate(rhs.left, env), instantiate(rhs.right, env))
    if isinstance(rhs, Neg):
        return Neg(instantiate(rhs.operand, env))
    if isinstance(rhs, Call):
        return Call(rhs.name, tuple(instantiate(a, env) for a in rhs.args))
    return rhs


def expand(o: Object) -> ExpandedObject:
    """Instantiate every equation for every tuple in its quantifier ranges."""
    cells: dict[tuple[str, tuple[int, ...]], Formula] = {}
    for region in expand_regions(o):
        needs_env = any(v is not None for v in region.vars)
        for idx in region.indices():
            if needs_env:
                env = {v: i for v, i in zip(region.vars, idx) if v is not None}
                rhs = instantiate(region.rhs, env)
            else:
                rhs = region.rhs
            key = (region.table, idx)
            if key in cells:
                raise MultipleDefinitionError(region.table, idx)
            cells[key] = rhs
    return ExpandedObject(dict(o.tables), cells)


def instance_count(o: Object) -> int:
    """Number of concrete equations expansion will produce."""
    return sum(r.count for r in expand_regions(o))


# --------------------------------------------------------------------------
# mapping tables onto worksheets

def map_expanded_formula(
    f: Formula, tables: dict[str, TableDecl], m: MappingSpec, host: CellAddr
) -> Formula:
    """Rewrite a concrete model-space formula into sheet space: element
    references become relative cell references at their mapped addresses;
    sheet-space leaves pass through unchanged."""
    if isinstance(f, ElementRef):
        entry = m.entries.get(f.table)
        if entry is None:
            raise MappingError(
                f"formula references table {f.table!r} which is not mapped")
        idx = tuple(ix.offset for ix in f.indices)
        target = element_addr(tables[f.table], entry, idx)
        sheet = None if target.sheet == host.sheet else target.sheet
        return CellRef(sheet, target.col, target.row)
    if isinstance(f, BinOp):
        return BinOp(f.op, map_expanded_formula(f.left, tables, m, host),
                     map_expanded_formula(f.right, tables, m, host))
    if isinstance(f, Neg):
        return Neg(map_expanded_formula(f.operand, tables, m, host))
    if isinstance(f, Call):
        return Call(f.name, tuple(map_expanded_formula(a, tables, m, host)
                                  for a in f.args))
    return f


def map_expanded(e: ExpandedObject, m: MappingSpec) -> Workbook:
    m.check_against(e.tables)
    w = Workbook()
    for entry in m:
        w.add_sheet(entry.origin.sheet)

    for (table, idx), rhs in e.cells.items():
        entry = m.entries.get(table)
        if entry is None:
            raise MappingError(f"table {table!r} is not mapped")
        addr = element_addr(e.tables[table], entry, idx)
        if (addr.col, addr.row) in w.sheets.get(addr.sheet, ()):
            raise MappingError(f"two elements are mapped to {a1_format(addr)}")
        if isinstance(rhs, Num):
            w.put(addr, rhs.value)
        elif isinstance(rhs, Str):
            w.put(addr, rhs.value)
        else:
            w.put(addr, map_expanded_formula(rhs, e.tables, m, addr))

    check_table_overlaps(e.tables, m)
    return w


def check_table_overlaps(tables: dict[str, TableDecl], m: MappingSpec) -> None:
    rects = []
    for entry in m:
        decl = tables.get(entry.table)
        if decl is None:
            continue
        wdt, hgt = table_extent(decl, entry.orient)
        rects.append((entry.table, entry.origin.sheet,
                      entry.origin.col, entry.origin.row, wdt, hgt))
    for i, (ta, sa, xa, ya, wa, ha) in enumerate(rects):
        for tb, sb, xb, yb, wb, hb in rects[i + 1:]:
            if sa != sb:
                continue
            if xa < xb + wb and xb < xa + wa and ya < yb + hb and yb < ya + ha:
                raise MappingError(f"tables {ta!r} and {tb!r} overlap on sheet {sa!r}")


def map_table(o: Object | ExpandedObject, m: MappingSpec) -> Workbook:
    """Lay every table element onto its worksheet cell, rewriting element
    references into cell references."""
    e = o if isinstance(o, ExpandedObject) else expand(o)
    return map_expanded(e, m)

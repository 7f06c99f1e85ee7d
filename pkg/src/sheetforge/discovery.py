"""Structure discovery: normalize formulas to layout-relative form, find
rectangular runs of repeated formulas, guess table names from captions,
lift a workbook into table elements, and compress expanded equations back
into quantified equations.

Discovery is semi-automatic by design: an override sidecar can correct
table ranges and names, and references that fall outside every mapped
range are reported rather than guessed at.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .algebra import ExpandedObject, MapEntry, MappingSpec, element_at, table_extent
from .errors import Diagnostic, ModelError
from .layout import Item, Skip, TablePlacement, Text, format_item, grid_from_placements
from .model import (
    BinOp, Bounds, Call, CellAddr, CellRef, ElementRef, Equation, Formula,
    Index, Neg, Num, Object, OffsetRef, Quantifier, RangeRef, Str, TableDecl,
    Workbook, a1_format,
)

# --------------------------------------------------------------------------
# layout-relative normal form

def _normalize_ref(ref: CellRef, at: CellAddr) -> OffsetRef:
    return OffsetRef(
        ref.sheet,
        ref.col_abs, ref.col if ref.col_abs else ref.col - at.col,
        ref.row_abs, ref.row if ref.row_abs else ref.row - at.row,
    )


def normalize_formula(f: Formula, at: CellAddr) -> Formula:
    """Rewrite relative references as offsets from `at`; absolute
    coordinates stay put.  Two cells hold the same formula exactly when
    their normal forms are equal."""
    if isinstance(f, CellRef):
        return _normalize_ref(f, at)
    if isinstance(f, RangeRef):
        return RangeRef(_normalize_ref(f.start, at), _normalize_ref(f.end, at))
    if isinstance(f, BinOp):
        return BinOp(f.op, normalize_formula(f.left, at), normalize_formula(f.right, at))
    if isinstance(f, Neg):
        return Neg(normalize_formula(f.operand, at))
    if isinstance(f, Call):
        return Call(f.name, tuple(normalize_formula(a, at) for a in f.args))
    return f


# --------------------------------------------------------------------------
# runs of repeated formulas

@dataclass(frozen=True, slots=True)
class Rect:
    """An axis-aligned rectangle of cells on one sheet."""

    sheet: str
    col: int
    row: int
    width: int
    height: int

    def contains(self, col: int, row: int) -> bool:
        return (self.col <= col < self.col + self.width
                and self.row <= row < self.row + self.height)

    def cells(self):
        for r in range(self.row, self.row + self.height):
            for c in range(self.col, self.col + self.width):
                yield c, r

    @property
    def area(self) -> int:
        return self.width * self.height


def detect_runs(w: Workbook) -> list[Rect]:
    """Maximal rectangles in which every formula cell has the same normal
    form.  Greedy and deterministic: seeds row-major, grows right then
    down, keeping whichever of the two growth orders has the larger area."""
    runs: list[Rect] = []
    for sheet, grid in w.sheets.items():
        keys: dict[tuple[int, int], Formula] = {}
        for (col, row), cell in grid.items():
            if not isinstance(cell, (str, int, float)):
                keys[(col, row)] = normalize_formula(cell, CellAddr(sheet, col, row))
        claimed: set[tuple[int, int]] = set()

        def free(col: int, row: int, key) -> bool:
            return ((col, row) not in claimed
                    and keys.get((col, row)) == key)

        for (col, row) in sorted(keys, key=lambda p: (p[1], p[0])):
            if (col, row) in claimed:
                continue
            key = keys[(col, row)]

            def grow(first_right: bool) -> tuple[int, int]:
                width = height = 1
                if first_right:
                    while free(col + width, row, key):
                        width += 1
                    while all(free(col + i, row + height, key) for i in range(width)):
                        height += 1
                else:
                    while free(col, row + height, key):
                        height += 1
                    while all(free(col + width, row + j, key) for j in range(height)):
                        width += 1
                return width, height

            w1, h1 = grow(True)
            w2, h2 = grow(False)
            width, height = (w1, h1) if w1 * h1 >= w2 * h2 else (w2, h2)
            claimed.update((col + i, row + j)
                           for j in range(height) for i in range(width))
            runs.append(Rect(sheet, col, row, width, height))
    return runs


# --------------------------------------------------------------------------
# table ranges: runs plus adjacent literals, coalesced into rectangles

def derive_table_ranges(w: Workbook, sheet: str) -> list[Rect]:
    """Group touching non-text content cells (formulas and numbers) into
    connected components and take bounding boxes, merging boxes until they
    are pairwise disjoint.  These are the ranges likely to be tables."""
    grid = w.sheets.get(sheet, {})
    content = {pos for pos, cell in grid.items() if not isinstance(cell, str)}
    seen: set[tuple[int, int]] = set()
    boxes: list[tuple[int, int, int, int]] = []
    for start in sorted(content, key=lambda p: (p[1], p[0])):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        min_c = max_c = start[0]
        min_r = max_r = start[1]
        while stack:
            c, r = stack.pop()
            min_c, max_c = min(min_c, c), max(max_c, c)
            min_r, max_r = min(min_r, r), max(max_r, r)
            for nb in ((c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)):
                if nb in content and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        boxes.append((min_c, min_r, max_c, max_r))

    merged = True
    while merged:
        merged = False
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                if a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]:
                    boxes[i] = (min(a[0], b[0]), min(a[1], b[1]),
                                max(a[2], b[2]), max(a[3], b[3]))
                    del boxes[j]
                    merged = True
                    break
            if merged:
                break
    boxes.sort(key=lambda b: (b[1], b[0]))
    return [Rect(sheet, c0, r0, c1 - c0 + 1, r1 - r0 + 1) for c0, r0, c1, r1 in boxes]


# --------------------------------------------------------------------------
# caption-based names

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def sanitize_name(text: str) -> str | None:
    cleaned = re.sub(r"[^A-Za-z0-9_]+", "_", text.strip()).strip("_")
    if not cleaned:
        return None
    if not re.match(r"[A-Za-z_]", cleaned):
        cleaned = "T_" + cleaned
    return cleaned


def guess_names(w: Workbook, runs: list[Rect],
                overrides: dict[tuple[str, int, int], str] | None = None) -> list[str]:
    """A name per run: the nearest text cell scanning up the run's first
    column, then left along its first row; collisions get _2, _3 suffixes;
    caller overrides win; T<n> when nothing is found."""
    overrides = overrides or {}
    taken: set[str] = set()
    names: list[str] = []
    for n, run in enumerate(runs, start=1):
        name = overrides.get((run.sheet, run.col, run.row))
        if name is None:
            grid = w.sheets.get(run.sheet, {})
            caption = None
            for r in range(run.row - 1, 0, -1):
                cell = grid.get((run.col, r))
                if isinstance(cell, str) and cell.strip():
                    caption = cell
                    break
            if caption is None:
                for c in range(run.col - 1, 0, -1):
                    cell = grid.get((c, run.row))
                    if isinstance(cell, str) and cell.strip():
                        caption = cell
                        break
            name = sanitize_name(caption) if caption is not None else None
            if name is None:
                name = f"T{n}"
        base = name
        suffix = 2
        while name in taken:
            name = f"{base}_{suffix}"
            suffix += 1
        taken.add(name)
        names.append(name)
    return names


# --------------------------------------------------------------------------
# lifting a workbook into table elements

def lift(
    w: Workbook,
    tables: dict[str, TableDecl],
    m: MappingSpec,
    warnings: list[str] | None = None,
) -> ExpandedObject:
    """Inverse of mapping: cells in mapped ranges become table elements and
    in-range references become element references.  References landing
    outside every range stay sheet-space and are reported."""
    m.check_against(tables)
    entries = list(m)

    def locate(addr: CellAddr) -> tuple[str, tuple[int, ...]] | None:
        for entry in entries:
            idx = element_at(tables[entry.table], entry, addr)
            if idx is not None:
                return entry.table, idx
        return None

    def rewrite(f: Formula, host_sheet: str, host: CellAddr) -> Formula:
        if isinstance(f, CellRef):
            target = CellAddr(f.sheet if f.sheet is not None else host_sheet,
                              f.col, f.row)
            hit = locate(target)
            if hit is None:
                if warnings is not None:
                    warnings.append(
                        f"{a1_format(host)}: reference to unmapped cell "
                        f"{a1_format(target)} kept as-is")
                if f.sheet is None:
                    return CellRef(host_sheet, f.col, f.row, f.col_abs, f.row_abs)
                return f
            table, idx = hit
            return ElementRef(table, tuple(Index(None, i) for i in idx))
        if isinstance(f, RangeRef):
            if warnings is not None:
                warnings.append(
                    f"{a1_format(host)}: range reference kept in sheet space")
            start, end = f.start, f.end
            if start.sheet is None:
                start = CellRef(host_sheet, start.col, start.row,
                                start.col_abs, start.row_abs)
            if end.sheet is None:
                end = CellRef(host_sheet, end.col, end.row, end.col_abs, end.row_abs)
            return RangeRef(start, end)
        if isinstance(f, BinOp):
            return BinOp(f.op, rewrite(f.left, host_sheet, host),
                         rewrite(f.right, host_sheet, host))
        if isinstance(f, Neg):
            return Neg(rewrite(f.operand, host_sheet, host))
        if isinstance(f, Call):
            return Call(f.name, tuple(rewrite(a, host_sheet, host) for a in f.args))
        return f

    cells: dict[tuple[str, tuple[int, ...]], Formula] = {}
    for entry in entries:
        decl = tables[entry.table]
        spans = [range(b.lo, b.hi + 1) for b in decl.dims]
        from .algebra import element_addr
        for idx in itertools.product(*spans):
            addr = element_addr(decl, entry, idx)
            cell = w.cell(addr)
            if cell is None:
                continue
            if isinstance(cell, str):
                cells[(entry.table, idx)] = Str(cell)
            elif isinstance(cell, (int, float)):
                cells[(entry.table, idx)] = Num(float(cell))
            else:
                cells[(entry.table, idx)] = rewrite(cell, addr.sheet, addr)
    return ExpandedObject(dict(tables), cells)


# --------------------------------------------------------------------------
# compressing expanded equations into quantified equations

_VAR_NAMES = "ijklmnpq"


def _skeleton(f: Formula, refs: list[ElementRef]):
    """Structure with element references blanked to (table, arity); every
    other leaf must match exactly for two cells to share an equation."""
    if isinstance(f, ElementRef):
        refs.append(f)
        return ("ref", f.table, len(f.indices))
    if isinstance(f, BinOp):
        return ("bin", f.op, _skeleton(f.left, refs), _skeleton(f.right, refs))
    if isinstance(f, Neg):
        return ("neg", _skeleton(f.operand, refs))
    if isinstance(f, Call):
        return ("call", f.name, tuple(_skeleton(a, refs) for a in f.args))
    return ("leaf", f)


def _rebuild(f: Formula, interp, refs_seen: list[int], var_of: dict[int, str]) -> Formula:
    if isinstance(f, ElementRef):
        ref_i = refs_seen[0]
        refs_seen[0] += 1
        indices = []
        for k in range(len(f.indices)):
            choice = interp[(ref_i, k)]
            if choice[0] == "const":
                indices.append(Index(None, choice[1]))
            else:
                indices.append(Index(var_of[choice[1]], choice[2]))
        return ElementRef(f.table, tuple(indices))
    if isinstance(f, BinOp):
        return BinOp(f.op, _rebuild(f.left, interp, refs_seen, var_of),
                     _rebuild(f.right, interp, refs_seen, var_of))
    if isinstance(f, Neg):
        return Neg(_rebuild(f.operand, interp, refs_seen, var_of))
    if isinstance(f, Call):
        return Call(f.name, tuple(_rebuild(a, interp, refs_seen, var_of)
                                  for a in f.args))
    return f


def compress(e: ExpandedObject) -> Object:
    """Merge elements whose right-hand sides agree after relativizing
    indices against the defining element, over maximal rectangular index
    regions; exceptional elements keep literal or constrained indices."""
    equations: list[Equation] = []
    for table, decl in e.tables.items():
        cells = {idx: f for (t, idx), f in e.cells.items() if t == table}
        if not cells:
            continue
        ndims = len(decl.dims)
        info: dict[tuple[int, ...], tuple] = {}
        for idx, f in cells.items():
            refs: list[ElementRef] = []
            skel = _skeleton(f, refs)
            info[idx] = (skel, refs)

        claimed: set[tuple[int, ...]] = set()
        for seed in sorted(cells):
            if seed in claimed:
                continue
            skel0, refs0 = info[seed]

            # candidate interpretations per (reference, dimension)
            cand: dict[tuple[int, int], set] = {}
            for ri, ref in enumerate(refs0):
                for k, ix in enumerate(ref.indices):
                    v = ix.offset
                    options = {("const", v)}
                    for d in range(ndims):
                        options.add(("rel", d, v - seed[d]))
                    cand[(ri, k)] = options

            def admits(idx: tuple[int, ...], state: dict) -> dict | None:
                got = info.get(idx)
                if got is None or idx in claimed:
                    return None
                skel, refs = got
                if skel != skel0:
                    return None
                new_state = {}
                for (ri, k), options in state.items():
                    v = refs[ri].indices[k].offset
                    kept = set()
                    for opt in options:
                        if opt[0] == "const":
                            if opt[1] == v:
                                kept.add(opt)
                        else:
                            if idx[opt[1]] + opt[2] == v:
                                kept.add(opt)
                    if not kept:
                        return None
                    new_state[(ri, k)] = kept
                return new_state

            spans = [[i, i] for i in seed]
            for g in reversed(range(ndims)):
                while spans[g][1] < decl.dims[g].hi:
                    nxt = spans[g][1] + 1
                    slab = itertools.product(*(
                        [range(lo, hi + 1) for lo, hi in spans[:g]]
                        + [[nxt]]
                        + [range(lo, hi + 1) for lo, hi in spans[g + 1:]]
                    ))
                    state = cand
                    ok = True
                    for idx in slab:
                        state = admits(idx, state)
                        if state is None:
                            ok = False
                            break
                    if not ok:
                        break
                    cand = state
                    spans[g][1] = nxt

            box = [tuple(r) for r in
                   (range(lo, hi + 1) for lo, hi in spans)]
            for idx in itertools.product(*box):
                claimed.add(idx)

            equations.extend(
                _emit_equations(table, decl, spans, cand, cells[seed]))

    return Object(e.tables.values(), equations)


def _emit_equations(table: str, decl: TableDecl, spans, cand, rhs0: Formula):
    ndims = len(decl.dims)

    # pick one interpretation per reference dimension
    interp: dict[tuple[int, int], tuple] = {}
    var_needed = [False] * ndims
    for (ri, k), options in cand.items():
        single = {d for d in range(ndims) if spans[d][0] == spans[d][1]}
        const = next((o for o in options if o[0] == "const"), None)
        chosen = None
        rels = sorted((o for o in options if o[0] == "rel"),
                      key=lambda o: (o[1] != k, o[1], abs(o[2])))
        for o in rels:
            if spans[o[1]][0] != spans[o[1]][1]:
                chosen = o  # a dimension that actually varies must be tracked
                break
        if chosen is None:
            chosen = const if const is not None else rels[0]
        interp[(ri, k)] = chosen
        if chosen[0] == "rel":
            var_needed[chosen[1]] = True

    var_of = {d: _VAR_NAMES[d % len(_VAR_NAMES)] for d in range(ndims)}
    rhs = _rebuild(rhs0, interp, [0], var_of)

    # express each dimension's span; a middle sub-range needs splitting
    def dim_indices(d: int) -> list:
        lo, hi = spans[d]
        dlo, dhi = decl.dims[d].lo, decl.dims[d].hi
        var = var_of[d]
        if lo == hi:
            if var_needed[d]:
                return [Quantifier(var, "=", lo)]
            return [lo]
        if lo == dlo and hi == dhi:
            return [Quantifier(var, "all", None)]
        if hi == dhi:
            return [Quantifier(var, ">", lo - 1)]
        if lo == dlo:
            return [Quantifier(var, "<", hi + 1)]
        if var_needed[d]:
            return [Quantifier(var, "=", v) for v in range(lo, hi + 1)]
        return list(range(lo, hi + 1))

    out = []
    for combo in itertools.product(*(dim_indices(d) for d in range(ndims))):
        out.append(Equation(table, tuple(combo), rhs))
    return out


# --------------------------------------------------------------------------
# annotations vs calculations

def split_annotations(o: Object | ExpandedObject):
    """Text-valued equations nothing else depends on go to the annotation
    object; everything else stays in the calculation object."""
    if isinstance(o, ExpandedObject):
        referenced = {
            node.table
            for f in o.cells.values()
            for node in _walk_refs(f)
        }
        annotation_tables = {
            t for t in o.tables
            if t not in referenced
            and any(key[0] == t for key in o.cells)
            and all(isinstance(f, Str) for (tt, _), f in o.cells.items() if tt == t)
        }
        calc = ExpandedObject(
            {t: d for t, d in o.tables.items() if t not in annotation_tables},
            {k: f for k, f in o.cells.items() if k[0] not in annotation_tables})
        notes = ExpandedObject(
            {t: d for t, d in o.tables.items() if t in annotation_tables},
            {k: f for k, f in o.cells.items() if k[0] in annotation_tables})
        return calc, notes

    referenced = {
        node.table for eq in o.equations for node in _walk_refs(eq.rhs)
    }
    annotation_tables = set()
    for name in o.tables:
        eqs = [eq for eq in o.equations if eq.lhs_table == name]
        if eqs and name not in referenced and all(
                isinstance(eq.rhs, Str) for eq in eqs):
            annotation_tables.add(name)
    calc = Object(
        (d for t, d in o.tables.items() if t not in annotation_tables),
        (eq for eq in o.equations if eq.lhs_table not in annotation_tables))
    notes = Object(
        (d for t, d in o.tables.items() if t in annotation_tables),
        (eq for eq in o.equations if eq.lhs_table in annotation_tables))
    return calc, notes


def _walk_refs(f: Formula):
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, ElementRef):
            yield node
        elif isinstance(node, BinOp):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Call):
            stack.extend(node.args)


# --------------------------------------------------------------------------
# the whole discovery pipeline

@dataclass
class Discovery:
    calculations: Object
    annotations: Object
    mapping: MappingSpec
    tables: dict[str, TableDecl]
    layouts: dict[str, list[list[str]]]  # sheet -> layout cell texts
    warnings: list[str]


def parse_overrides(text: str) -> dict[tuple[str, int, int], str]:
    """Sidecar lines `range Sheet!A1:B9 name=Ident` keyed by range origin."""
    from .model import parse_cell_addr

    out: dict[tuple[str, int, int], str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = re.match(
            r"range\s+(\S+?):(\S+)\s+name=([A-Za-z_][A-Za-z0-9_]*)$", line)
        if m is None:
            raise Diagnostic(f"bad override line: {raw!r}", n, 1)
        start = parse_cell_addr(m.group(1))
        out[(start.sheet, start.col, start.row)] = m.group(3)
    return out


def discover_workbook(
    w: Workbook, overrides: dict[tuple[str, int, int], str] | None = None
) -> Discovery:
    """Recover a layout-free model and a layout depiction from a workbook."""
    warnings: list[str] = []
    rects: list[Rect] = []
    for sheet in w.sheets:
        rects.extend(derive_table_ranges(w, sheet))
    names = guess_names(w, rects, overrides)

    tables: dict[str, TableDecl] = {}
    mapping = MappingSpec()
    for rect, name in zip(rects, names):
        if rect.width > 1 and rect.height > 1:
            decl = TableDecl(name, (Bounds(1, rect.height), Bounds(1, rect.width)))
            orient = "yx"
        elif rect.height > 1:
            decl = TableDecl(name, (Bounds(1, rect.height),))
            orient = "y"
        elif rect.width > 1:
            decl = TableDecl(name, (Bounds(1, rect.width),))
            orient = "x"
        else:
            decl = TableDecl(name, ())
            orient = ""
        tables[name] = decl
        mapping.add(MapEntry(name, CellAddr(rect.sheet, rect.col, rect.row), orient))

    expanded = lift(w, tables, mapping, warnings)
    compressed = compress(expanded)
    calculations, annotations = split_annotations(compressed)

    # annotation tables carry no calculations; depict their elements as
    # plain text in the layout rather than as table placements
    from .algebra import element_addr

    annotation_texts: dict[CellAddr, str] = {}
    for name in annotations.tables:
        entry = mapping[name]
        decl = tables[name]
        for (t, idx), f in expanded.cells.items():
            if t == name and isinstance(f, Str):
                annotation_texts[element_addr(decl, entry, idx)] = f.value

    layouts: dict[str, list[list[str]]] = {}
    for sheet, grid in w.sheets.items():
        placed: list[tuple[CellAddr, int, int, Item]] = []
        for rect, name in zip(rects, names):
            if rect.sheet != sheet or name not in calculations.tables:
                continue
            entry = mapping[name]
            wdt, hgt = table_extent(tables[name], entry.orient)
            placed.append((entry.origin, wdt, hgt,
                           TablePlacement(name, entry.orient)))
        for (col, row), cell in grid.items():
            if isinstance(cell, str) and not any(
                    r.contains(col, row) for r in rects if r.sheet == sheet):
                placed.append((CellAddr(sheet, col, row), 1, 1, Text(cell)))
        for addr, text in annotation_texts.items():
            if addr.sheet == sheet:
                placed.append((addr, 1, 1, Text(text)))
        rows = grid_from_placements(sheet, placed)
        layouts[sheet] = [[format_item(it) for it in row] for row in rows]
    return Discovery(calculations, annotations, mapping, tables, layouts, warnings)

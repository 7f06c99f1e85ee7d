"""Compilation pipeline: program text + layouts -> mapping -> workbook/XML.

Large instantiations avoid materializing one formula tree per cell: a
quantified equation whose references move in lockstep with its own
elements serializes to the same R1C1 string everywhere, so the string is
computed once and stamped across the region.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import algebra, emitter, layout as layout_mod, notation
from .algebra import MappingSpec, Region, element_addr, instantiate, map_table
from .errors import LayoutError, ModelError
from .model import CellAddr, Num, Object, Str, TableDecl, Workbook


@dataclass
class Compiled:
    object: Object
    mapping: MappingSpec
    texts: dict[CellAddr, str]
    sheet_order: list[str]


def instantiate_program(
    program: notation.Program, sizes: list[int]
) -> tuple[Object, list[algebra.MapEntry]]:
    """Sizes call the last function definition; without sizes the program's
    own top expression is evaluated."""
    defs = {d.name: d for d in program.definitions}
    if sizes:
        if not program.definitions:
            raise ModelError("size arguments given but the model defines no function")
        main = program.definitions[-1]
        if len(sizes) != len(main.params):
            raise ModelError(
                f"{main.name} takes {len(main.params)} size argument(s), "
                f"got {len(sizes)}")
        return algebra.eval_obj_expr(
            notation.CallExpr(main.name, tuple(Num(float(s)) for s in sizes)),
            {}, defs)
    if program.top_expr is None:
        raise ModelError("model has no top-level expression; pass size arguments")
    return algebra.eval_obj_expr(program.top_expr, {}, defs)


def compile_program(
    program: notation.Program,
    sizes: list[int],
    layout_csvs: dict[str, str] | None = None,
) -> Compiled:
    """Resolve the object, gather mapping entries from mapping clauses,
    inline grid formats, and per-sheet layout CSVs, and cross-check."""
    obj, entries = instantiate_program(program, sizes)
    mapping = MappingSpec()
    texts: dict[CellAddr, str] = {}
    sheet_order: list[str] = []

    def note_sheet(name: str) -> None:
        if name not in sheet_order:
            sheet_order.append(name)

    for e in entries:
        mapping.add(e)
        note_sheet(e.origin.sheet)

    grids: list[layout_mod.GridFormat] = []
    for fmt in program.layout:
        grids.append(layout_mod.fold_format(fmt, {}))
    for sheet, text in (layout_csvs or {}).items():
        cells = emitter.read_layout_csv(text)
        grids.append(layout_mod.parse_layout_sheet(cells, obj.tables, sheet))

    for grid in grids:
        note_sheet(grid.anchor.sheet)
        placements = layout_mod.layout_grid(grid, obj.tables)
        spec, grid_texts = layout_mod.placements_to_mapping(placements)
        for entry in spec:
            mapping.add(entry)
        for addr, text in grid_texts.items():
            if addr in texts:
                raise LayoutError(f"two text items land on {addr}")
            texts[addr] = text

    mapping.check_against(obj.tables)
    layout_mod.check_tables_placed(obj.tables, mapping)
    _check_texts_clear(obj.tables, mapping, texts)
    return Compiled(obj, mapping, texts, sheet_order)


def _check_texts_clear(tables: dict[str, TableDecl], mapping: MappingSpec,
                       texts: dict[CellAddr, str]) -> None:
    rects = []
    for entry in mapping:
        w, h = algebra.table_extent(tables[entry.table], entry.orient)
        rects.append((entry.table, entry.origin, w, h))
    for addr in texts:
        for name, origin, w, h in rects:
            if (addr.sheet == origin.sheet
                    and origin.col <= addr.col < origin.col + w
                    and origin.row <= addr.row < origin.row + h):
                raise LayoutError(f"text at {addr} overlaps table {name!r}")


def compile_workbook(result: Compiled) -> Workbook:
    """Materialize the compiled spreadsheet as an in-memory workbook."""
    w = Workbook()
    for sheet in result.sheet_order:
        w.add_sheet(sheet)
    mapped = map_table(result.object, result.mapping)
    for addr, cell in mapped.cells():
        w.put(addr, cell)
    for addr, text in result.texts.items():
        w.put(addr, text)
    return w


# --------------------------------------------------------------------------
# streaming XML emission

def _region_env(region: Region, idx: tuple[int, ...]) -> dict[str, int]:
    return {v: i for v, i in zip(region.vars, idx) if v is not None}


def _probe_indices(region: Region) -> list[tuple[int, ...]]:
    base = tuple(lo for lo, _ in region.spans)
    probes = [base]
    for d, (lo, hi) in enumerate(region.spans):
        if hi > lo:
            probes.append(base[:d] + (lo + 1,) + base[d + 1:])
    return probes


def compile_to_xml(result: Compiled) -> bytes:
    """Emit the compiled spreadsheet straight to XML bytes.

    Byte-identical to `emit_xml(compile_workbook(result))` but without a
    per-cell formula tree, so 10^6-cell instantiations stay fast.
    """
    obj, mapping = result.object, result.mapping
    mapping.check_against(obj.tables)
    algebra.check_table_overlaps(obj.tables, mapping)
    regions = algebra.expand_regions(obj)

    chunks: dict[str, list[tuple[int, int, str]]] = {s: [] for s in result.sheet_order}
    for addr, text in result.texts.items():
        chunks.setdefault(addr.sheet, []).append(
            (addr.row, addr.col, emitter.literal_cell_xml(addr.col, text)))

    for region in regions:
        decl = obj.tables[region.table]
        entry = mapping[region.table]
        sheet_chunks = chunks.setdefault(entry.origin.sheet, [])

        if isinstance(region.rhs, (Num, Str)):
            value = region.rhs.value
            for idx in region.indices():
                a = element_addr(decl, entry, idx)
                sheet_chunks.append(
                    (a.row, a.col, emitter.literal_cell_xml(a.col, value)))
            continue

        def render(idx: tuple[int, ...]) -> str:
            host = element_addr(decl, entry, idx)
            concrete = instantiate(region.rhs, _region_env(region, idx))
            rewritten = algebra.map_expanded_formula(concrete, obj.tables, mapping, host)
            return emitter.format_formula_r1c1(rewritten, host)

        probes = _probe_indices(region)
        rendered = [render(p) for p in probes]
        if all(r == rendered[0] for r in rendered):
            template = rendered[0]
            for idx in region.indices():
                a = element_addr(decl, entry, idx)
                sheet_chunks.append(
                    (a.row, a.col, emitter.formula_cell_xml(a.col, template)))
        else:
            for idx in region.indices():
                a = element_addr(decl, entry, idx)
                sheet_chunks.append(
                    (a.row, a.col, emitter.formula_cell_xml(a.col, render(idx))))

    parts = [emitter._XML_HEAD]
    for sheet in chunks:
        parts.append(emitter.sheet_xml(sheet, chunks[sheet]))
    parts.append("</Workbook>\n")
    return "".join(parts).encode("utf-8")

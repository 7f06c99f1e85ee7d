"""Command-line entry point.

    sheetforge compile  model.shf --layout Lets.layout.csv -o out.xml -- 2000 2010 5
    sheetforge verify   model.shf --layout-a a.csv --layout-b b.csv -- 2000 2010 5
    sheetforge discover book.xml --out-dir recovered/
    sheetforge crosstab book.xml spec.txt -o out.xml
    sheetforge grammar

Exit codes: 0 success, 1 diagnostics, 2 usage errors.  Output files are
written atomically; a failing command never leaves a partial file.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import build, crosstab as crosstab_mod, discovery, emitter, notation
from .algebra import element_addr
from .errors import SheetError
from .evaluator import evaluate
from .model import a1_format


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _layout_sheet_name(path: Path) -> str:
    name = path.name
    for suffix in (".layout.csv", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _read_layouts(paths: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for p in paths:
        path = Path(p)
        sheet = _layout_sheet_name(path)
        if sheet in out:
            raise SheetError(f"two layout files for sheet {sheet!r}")
        out[sheet] = path.read_text(encoding="utf-8")
    return out


def _compile(model_path: str, layout_paths: list[str], sizes: list[int]) -> build.Compiled:
    program = notation.parse_program(Path(model_path).read_text(encoding="utf-8"))
    return build.compile_program(program, sizes, _read_layouts(layout_paths))


def cmd_compile(args) -> int:
    result = _compile(args.model, args.layout, args.sizes)
    data = build.compile_to_xml(result)
    out = Path(args.output or (Path(args.model).stem + ".xml"))
    _write_atomic(out, data)
    print(f"wrote {out} ({len(result.mapping)} tables, "
          f"{len(result.texts)} text cells)")
    return 0


def cmd_verify(args) -> int:
    a = _compile(args.model, args.layout_a, args.sizes)
    b = _compile(args.model, args.layout_b, args.sizes)
    values_a = evaluate(build.compile_workbook(a))
    values_b = evaluate(build.compile_workbook(b))

    mismatches = []
    for name, decl in sorted(a.object.tables.items()):
        entry_a, entry_b = a.mapping[name], b.mapping[name]
        import itertools
        for idx in itertools.product(*(range(d.lo, d.hi + 1) for d in decl.dims)):
            va = values_a.get(element_addr(decl, entry_a, idx))
            vb = values_b.get(element_addr(decl, entry_b, idx))
            if va != vb:
                mismatches.append((name, idx, va, vb))
    if mismatches:
        print(f"DIFFER: {len(mismatches)} element(s)")
        for name, idx, va, vb in mismatches[:20]:
            pos = ", ".join(str(i) for i in idx)
            print(f"  {name}[{pos}]: {va!r} vs {vb!r}")
        return 1
    print("IDENTICAL")
    return 0


def cmd_discover(args) -> int:
    data = Path(args.workbook).read_bytes()
    w = emitter.read_xml(data)
    overrides = None
    if args.overrides:
        overrides = discovery.parse_overrides(
            Path(args.overrides).read_text(encoding="utf-8"))
    found = discovery.discover_workbook(w, overrides)

    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.workbook).stem
    model_path = out_dir / f"{stem}.model.shf"
    notes_path = out_dir / f"{stem}.annotations.shf"
    _write_atomic(model_path, notation.show_object(found.calculations).encode())
    _write_atomic(notes_path, notation.show_object(found.annotations).encode())
    for sheet, rows in found.layouts.items():
        _write_atomic(out_dir / f"{sheet}.layout.csv",
                      emitter.write_layout_csv(rows).encode())
    print(f"{len(found.tables)} tables, "
          f"{len(found.calculations.equations)} equations, "
          f"{len(found.warnings)} warning(s)")
    for warning in found.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_crosstab(args) -> int:
    w = emitter.read_xml(Path(args.workbook).read_bytes())
    spec = crosstab_mod.parse_spec(Path(args.spec).read_text(encoding="utf-8"))
    out_wb = crosstab_mod.insert_crosstab(w, spec)
    out = Path(args.output or (Path(args.workbook).stem + ".crosstab.xml"))
    _write_atomic(out, emitter.emit_xml(out_wb))
    values1 = crosstab_mod.unique_sorted_values(
        w, spec.source_sheet, spec.dim_columns[0], spec.data_rows)
    values2 = crosstab_mod.unique_sorted_values(
        w, spec.source_sheet, spec.dim_columns[1], spec.data_rows)
    print(f"wrote {out}: {len(values2)} x {len(values1)} table over "
          f"{spec.data_rows.extent} rows at {a1_format(spec.result_anchor)}")
    return 0


def cmd_grammar(args) -> int:
    print(notation.GRAMMAR, end="")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sheetforge",
        description="Compile, verify, recover, and cross-tabulate "
                    "equation-based spreadsheet models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a model to workbook XML")
    p.add_argument("model")
    p.add_argument("--layout", action="append", default=[],
                   help="layout CSV for one sheet (repeatable)")
    p.add_argument("-o", "--output")
    p.add_argument("sizes", nargs="*", type=int,
                   help="size arguments, after --")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="compile under two layouts and compare")
    p.add_argument("model")
    p.add_argument("--layout-a", action="append", default=[], required=True)
    p.add_argument("--layout-b", action="append", default=[], required=True)
    p.add_argument("sizes", nargs="*", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("discover", help="recover a model from workbook XML")
    p.add_argument("workbook")
    p.add_argument("--overrides")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("crosstab", help="insert a cross-tabulation")
    p.add_argument("workbook")
    p.add_argument("spec")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_crosstab)

    p = sub.add_parser("grammar", help="print the model-file grammar")
    p.set_defaults(func=cmd_grammar)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except SheetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Workbook serialization: SpreadsheetML-2003-subset XML with the
mandatory row/column cell sort, CSV ingestion, and a text-grid dump.

Formulas are stored on disk in R1C1 form with relative offsets in
brackets, as the XML dialect requires; CSV fixtures and the grid dump
use A1 form.
"""
from __future__ import annotations

import csv
import io
import re
import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape, quoteattr

from . import model
from .errors import Diagnostic, XmlFormatError
from .model import (
    BinOp, Call, CellAddr, CellRef, Formula, Neg, Num, RangeRef, Str,
    Workbook, col_letters, col_number, format_formula, format_number,
    format_sheet_prefix,
)

# --------------------------------------------------------------------------
# sheet-space formula text (A1 and R1C1 dialects)

_SHEET_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[0-9]+(?:\.[0-9]+)?)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<qsheet>'(?:[^']|'')*')
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct><=|>=|<>|[!$:(),+\-*/&=<>\[\]])
    """,
    re.VERBOSE,
)

_A1_CELL_RE = re.compile(r"^([A-Za-z]{1,3})([0-9]+)$")
_R1C1_RE = re.compile(r"^[Rr]([0-9]+)?(?:([Cc])([0-9]+)?)?$")


class _FormulaParser:
    """Recursive descent over one sheet-space formula."""

    def __init__(self, text: str, dialect: str, host: CellAddr | None):
        self.text = text
        self.dialect = dialect
        self.host = host
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _SHEET_TOKEN_RE.match(text, pos)
            if m is None:
                raise Diagnostic(f"bad character {text[pos]!r} in formula", col=pos + 1)
            pos = m.end()
            kind = m.lastgroup
            if kind == "ws":
                continue
            self.toks.append((kind, m.group(), m.start() + 1))
        self.toks.append(("eof", "", len(text) + 1))
        self.pos = 0

    def peek(self, k: int = 0) -> tuple[str, str, int]:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def take(self) -> tuple[str, str, int]:
        t = self.toks[self.pos]
        if t[0] != "eof":
            self.pos += 1
        return t

    def expect_punct(self, value: str) -> None:
        kind, text, col = self.peek()
        if kind == "punct" and text == value:
            self.take()
            return
        raise Diagnostic(f"expected {value!r} in formula", col=col,
                         expected=(value,))

    def at_punct(self, *values: str) -> bool:
        kind, text, _ = self.peek()
        return kind == "punct" and text in values

    def parse(self) -> Formula:
        f = self.cmp_expr()
        kind, text, col = self.peek()
        if kind != "eof":
            raise Diagnostic(f"unexpected {text!r} after formula", col=col)
        return f

    def cmp_expr(self) -> Formula:
        left = self.concat_expr()
        while self.at_punct("=", "<>", "<", ">", "<=", ">="):
            op = self.take()[1]
            left = BinOp(op, left, self.concat_expr())
        return left

    def concat_expr(self) -> Formula:
        left = self.add_expr()
        while self.at_punct("&"):
            self.take()
            left = BinOp("&", left, self.add_expr())
        return left

    def add_expr(self) -> Formula:
        left = self.mul_expr()
        while self.at_punct("+", "-"):
            op = self.take()[1]
            left = BinOp(op, left, self.mul_expr())
        return left

    def mul_expr(self) -> Formula:
        left = self.unary_expr()
        while self.at_punct("*", "/"):
            op = self.take()[1]
            left = BinOp(op, left, self.unary_expr())
        return left

    def unary_expr(self) -> Formula:
        if self.at_punct("-"):
            self.take()
            inner = self.unary_expr()
            # fold into the literal so negative numbers round-trip structurally
            return Num(-inner.value) if isinstance(inner, Num) else Neg(inner)
        if self.at_punct("+"):
            self.take()
            return self.unary_expr()
        return self.atom()

    def atom(self) -> Formula:
        kind, text, col = self.peek()
        if kind == "number":
            self.take()
            return Num(float(text))
        if kind == "string":
            self.take()
            return Str(text[1:-1].replace('""', '"'))
        if self.at_punct("("):
            self.take()
            inner = self.cmp_expr()
            self.expect_punct(")")
            return inner
        if kind == "qsheet":
            self.take()
            self.expect_punct("!")
            return self.ref_or_range(text[1:-1].replace("''", "'"))
        if kind == "name":
            nxt = self.peek(1)
            if nxt[0] == "punct" and nxt[1] == "(":
                self.take()
                self.take()
                if text.upper() not in model.FUNCTIONS:
                    raise Diagnostic(f"unsupported function {text!r}", col=col,
                                     expected=model.FUNCTIONS)
                args: list[Formula] = []
                if not self.at_punct(")"):
                    args.append(self.cmp_expr())
                    while self.at_punct(","):
                        self.take()
                        args.append(self.cmp_expr())
                self.expect_punct(")")
                return Call(text.upper(), tuple(args))
            if nxt[0] == "punct" and nxt[1] == "!":
                self.take()
                self.take()
                return self.ref_or_range(text)
            return self.ref_or_range(None)
        if self.at_punct("$") and self.dialect == "a1":
            return self.ref_or_range(None)
        raise Diagnostic(f"expected a value or reference, got {text or kind!r}", col=col)

    def ref_or_range(self, sheet: str | None) -> Formula:
        start = self.cell_ref(sheet)
        if self.at_punct(":"):
            self.take()
            end_sheet = sheet
            kind, text, _ = self.peek()
            if kind == "qsheet":
                self.take()
                self.expect_punct("!")
                end_sheet = text[1:-1].replace("''", "'")
            elif kind == "name" and self.peek(1)[1] == "!":
                end_sheet = self.take()[1]
                self.take()
            return RangeRef(start, self.cell_ref(end_sheet))
        return start

    def cell_ref(self, sheet: str | None) -> CellRef:
        if self.dialect == "a1":
            return self.cell_ref_a1(sheet)
        return self.cell_ref_r1c1(sheet)

    def cell_ref_a1(self, sheet: str | None) -> CellRef:
        col_abs = False
        if self.at_punct("$"):
            self.take()
            col_abs = True
        kind, text, col = self.peek()
        if kind != "name":
            raise Diagnostic("expected a cell reference", col=col)
        m = _A1_CELL_RE.match(text)
        if m and not self.at_after_dollar():
            self.take()
            return CellRef(sheet, col_number(m.group(1)), int(m.group(2)), col_abs, False)
        if re.fullmatch(r"[A-Za-z]{1,3}", text):
            self.take()
            row_abs = False
            if self.at_punct("$"):
                self.take()
                row_abs = True
            kind2, text2, col2 = self.peek()
            if kind2 != "number" or "." in text2:
                raise Diagnostic("expected a row number", col=col2)
            self.take()
            return CellRef(sheet, col_number(text), int(text2), col_abs, row_abs)
        raise Diagnostic(f"unknown name {text!r} in formula", col=col)

    def at_after_dollar(self) -> bool:
        # `A$2` arrives as name "A", punct "$", number; `A2` is one name token
        nxt = self.peek(1)
        return nxt[0] == "punct" and nxt[1] == "$"

    def cell_ref_r1c1(self, sheet: str | None) -> CellRef:
        kind, text, col = self.peek()
        if kind != "name":
            raise Diagnostic("expected an R1C1 reference", col=col)
        m = _R1C1_RE.match(text)
        if m is None:
            raise Diagnostic(f"bad R1C1 reference {text!r}", col=col)
        self.take()
        row_digits, c_part, col_digits = m.groups()

        if row_digits is not None:
            row_abs, row_val = True, int(row_digits)
        elif c_part is None and self.at_punct("["):
            row_abs, row_val = False, self.bracket_offset()
        else:
            row_abs, row_val = False, 0

        if c_part is None:
            kind2, text2, col2 = self.peek()
            m2 = re.fullmatch(r"[Cc]([0-9]+)?", text2) if kind2 == "name" else None
            if m2 is None:
                raise Diagnostic("expected the C part of an R1C1 reference", col=col2)
            self.take()
            col_digits = m2.group(1)
        if col_digits is not None:
            col_abs, col_val = True, int(col_digits)
        elif self.at_punct("["):
            col_abs, col_val = False, self.bracket_offset()
        else:
            col_abs, col_val = False, 0

        if self.host is None:
            raise Diagnostic("relative R1C1 reference needs a host cell")
        row = row_val if row_abs else self.host.row + row_val
        column = col_val if col_abs else self.host.col + col_val
        if row < 1 or column < 1:
            raise Diagnostic(f"reference {text!r} resolves outside the grid")
        return CellRef(sheet, column, row, col_abs, row_abs)

    def bracket_offset(self) -> int:
        self.expect_punct("[")
        sign = 1
        if self.at_punct("-"):
            self.take()
            sign = -1
        kind, text, col = self.peek()
        if kind != "number" or "." in text:
            raise Diagnostic("expected an integer offset", col=col)
        self.take()
        self.expect_punct("]")
        return sign * int(text)


def parse_formula_a1(text: str) -> Formula:
    """Parse an A1-dialect formula body (no leading `=`)."""
    return _FormulaParser(text, "a1", None).parse()


def parse_formula_r1c1(text: str, host: CellAddr) -> Formula:
    """Parse an R1C1-dialect formula; offsets resolve against `host`."""
    return _FormulaParser(text, "r1c1", host).parse()


def format_formula_a1(f: Formula) -> str:
    def atom(node) -> str:
        if isinstance(node, CellRef):
            return model.a1_format(node)
        if isinstance(node, RangeRef):
            end = node.end
            if end.sheet == node.start.sheet:
                end = CellRef(None, end.col, end.row, end.col_abs, end.row_abs)
            return f"{model.a1_format(node.start)}:{model.a1_format(end)}"
        raise Diagnostic(f"cannot write {node!r} in a worksheet formula")

    return format_formula(f, atom)


def _r1c1_ref(ref: CellRef, host: CellAddr) -> str:
    prefix = format_sheet_prefix(ref.sheet)
    if ref.row_abs:
        r = f"R{ref.row}"
    else:
        d = ref.row - host.row
        r = "R" if d == 0 else f"R[{d}]"
    if ref.col_abs:
        c = f"C{ref.col}"
    else:
        d = ref.col - host.col
        c = "C" if d == 0 else f"C[{d}]"
    return prefix + r + c


def format_formula_r1c1(f: Formula, host: CellAddr) -> str:
    def atom(node) -> str:
        if isinstance(node, CellRef):
            return _r1c1_ref(node, host)
        if isinstance(node, RangeRef):
            end = node.end
            if end.sheet == node.start.sheet:
                end = CellRef(None, end.col, end.row, end.col_abs, end.row_abs)
            return f"{_r1c1_ref(node.start, host)}:{_r1c1_ref(end, host)}"
        raise Diagnostic(f"cannot write {node!r} in a worksheet formula")

    return format_formula(f, atom)


# --------------------------------------------------------------------------
# XML writer

_XML_HEAD = (
    '<?xml version="1.0" encoding="utf-8"?>\n'
    '<?mso-application progid="Excel.Sheet"?>\n'
    '<Workbook xmlns="urn:schemas-microsoft-com:office:spreadsheet"'
    ' xmlns:ss="urn:schemas-microsoft-com:office:spreadsheet"'
    ' xmlns:x="urn:schemas-microsoft-com:office:excel">\n'
)


def literal_cell_xml(col: int, value: float | str) -> str:
    if isinstance(value, str):
        return (f'    <Cell ss:Index="{col}">'
                f'<Data ss:Type="String">{escape(value)}</Data></Cell>\n')
    return (f'    <Cell ss:Index="{col}">'
            f'<Data ss:Type="Number">{format_number(value)}</Data></Cell>\n')


def formula_cell_xml(col: int, r1c1: str) -> str:
    return f'    <Cell ss:Index="{col}" ss:Formula={quoteattr("=" + r1c1)}/>\n'


def sheet_xml(name: str, chunks: list[tuple[int, int, str]]) -> str:
    """One worksheet from (row, col, cell-xml) chunks, sorted by row then
    column as the format demands."""
    out = [f"  <Worksheet ss:Name={quoteattr(name)}>\n"]
    if not chunks:
        out.append("    <Table/>\n  </Worksheet>\n")
        return "".join(out)
    out.append("   <Table>\n")
    chunks.sort(key=lambda t: (t[0], t[1]))
    current = None
    for row, col, chunk in chunks:
        if row != current:
            if current is not None:
                out.append("   </Row>\n")
            out.append(f'   <Row ss:Index="{row}">\n')
            current = row
        out.append(chunk)
    out.append("   </Row>\n  </Table>\n  </Worksheet>\n")
    return "".join(out)


def emit_xml(w: Workbook) -> bytes:
    """Serialize a workbook; output is deterministic byte-for-byte."""
    parts = [_XML_HEAD]
    for sheet, grid in w.sheets.items():
        chunks: list[tuple[int, int, str]] = []
        for (col, row), cell in grid.items():
            if isinstance(cell, (int, float)) or isinstance(cell, str):
                chunks.append((row, col, literal_cell_xml(col, cell)))
            else:
                host = CellAddr(sheet, col, row)
                chunks.append(
                    (row, col, formula_cell_xml(col, format_formula_r1c1(cell, host))))
        parts.append(sheet_xml(sheet, chunks))
    parts.append("</Workbook>\n")
    return "".join(parts).encode("utf-8")


# --------------------------------------------------------------------------
# XML reader

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]

def _attr(elem, name: str) -> str | None:
    for key, value in elem.attrib.items():
        if _local(key) == name:
            return value
    return None


def read_xml(data: bytes) -> Workbook:
    """Inverse of emit_xml.  Styles and unrecognized elements are skipped;
    malformed XML or an unsupported formula is a positioned diagnostic."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise XmlFormatError(f"bad workbook XML: {exc.msg}", line, col) from None
    if _local(root.tag) != "Workbook":
        raise XmlFormatError(f"expected a Workbook element, got {_local(root.tag)!r}")

    w = Workbook()
    for ws in root:
        if _local(ws.tag) != "Worksheet":
            continue
        name = _attr(ws, "Name")
        if name is None:
            raise XmlFormatError("Worksheet element has no ss:Name")
        w.add_sheet(name)
        for table in ws:
            if _local(table.tag) != "Table":
                continue
            row_index = 0
            for row in table:
                if _local(row.tag) != "Row":
                    continue
                ri = _attr(row, "Index")
                row_index = int(ri) if ri is not None else row_index + 1
                col_index = 0
                for cell in row:
                    if _local(cell.tag) != "Cell":
                        continue
                    ci = _attr(cell, "Index")
                    col_index = int(ci) if ci is not None else col_index + 1
                    addr = CellAddr(name, col_index, row_index)
                    formula = _attr(cell, "Formula")
                    if formula is not None:
                        body = formula[1:] if formula.startswith("=") else formula
                        try:
                            w.put(addr, parse_formula_r1c1(body, addr))
                        except Diagnostic as exc:
                            raise XmlFormatError(
                                f"in cell {model.a1_format(addr)}: {exc}") from None
                        continue
                    for data_el in cell:
                        if _local(data_el.tag) != "Data":
                            continue
                        ty = _attr(data_el, "Type") or "String"
                        text = data_el.text or ""
                        if ty == "Number":
                            try:
                                w.put(addr, float(text))
                            except ValueError:
                                raise XmlFormatError(
                                    f"bad number {text!r} at {model.a1_format(addr)}"
                                ) from None
                        else:
                            w.put(addr, text)
                        break
    return w


# --------------------------------------------------------------------------
# text surfaces: grid dump and CSV

def dump_grid(w: Workbook, sheet: str) -> str:
    """Values or `=formula` per cell, tab-separated, row-major."""
    grid = w.sheets.get(sheet)
    if not grid:
        return ""
    max_col = max(col for col, _ in grid)
    max_row = max(row for _, row in grid)
    lines = []
    for row in range(1, max_row + 1):
        fields = []
        for col in range(1, max_col + 1):
            cell = grid.get((col, row))
            if cell is None:
                fields.append("")
            elif isinstance(cell, str):
                fields.append(cell)
            elif isinstance(cell, (int, float)):
                fields.append(format_number(cell))
            else:
                fields.append("=" + format_formula_a1(cell))
        lines.append("\t".join(fields))
    return "\n".join(lines)


def read_csv(text: str, sheet: str) -> Workbook:
    """Literal cells from CSV: numbers parse as numbers, a leading
    apostrophe forces text, `=...` is read as an A1 formula."""
    w = Workbook()
    w.add_sheet(sheet)
    reader = csv.reader(io.StringIO(text))
    for r, fields in enumerate(reader, start=1):
        for c, field in enumerate(fields, start=1):
            if field == "":
                continue
            addr = CellAddr(sheet, c, r)
            if field.startswith("'"):
                w.put(addr, field[1:])
            elif field.startswith("="):
                try:
                    w.put(addr, parse_formula_a1(field[1:]))
                except Diagnostic as exc:
                    raise Diagnostic(f"row {r} column {c}: {exc}", r, c) from None
            else:
                try:
                    w.put(addr, float(field))
                except ValueError:
                    w.put(addr, field)
    return w


def read_layout_csv(text: str) -> list[list[str]]:
    """Raw cell texts of a layout sheet."""
    return [list(fields) for fields in csv.reader(io.StringIO(text))]


def write_layout_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()

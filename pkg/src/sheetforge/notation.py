"""Parser and pretty-printer for the model notation.

A model file contains function definitions, an object expression built
from object literals `{# decls | equations #}`, calls, `union`, and
`mapping ... to ... by ...` clauses, followed by optional layout formats
(`row(...) @ addr`, `grid(...) @ addr`).

Parsing yields template values whose bound, index, and address
expressions may still mention size parameters; `fold_*` turns templates
into concrete core values once parameters have integer values.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import model
from .errors import Diagnostic, ModelError
from .model import (
    BinOp, Call, CellAddr, CellRef, Equation, Formula, Index, NameRef, Neg,
    Num, Object, Quantifier, RangeRef, Str, TableDecl, a1_format,
    col_number, format_formula,
)

KEYWORDS = frozenset(
    "let be union mapping to by all skip row grid vector".split()
)
ORIENTATIONS = ("yx", "xy", "y", "x")

GRAMMAR = """\
program    := { definition } [ objexpr ] { format } ;
definition := "let" name "(" [ name { "," name } ] ")" "be" objexpr ;
objexpr    := unionexpr { "mapping" mapentry { "," mapentry } } ;
unionexpr  := objprimary { ( "union" | "\\/" ) objprimary } ;
objprimary := object | name "(" [ expr { "," expr } ] ")" | "(" objexpr ")" ;
object     := "{#" [ decl { "," decl } ] "|" [ equation { "," equation } ] "#}" ;
decl       := name "[" [ bounds { "," bounds } ] "]" ;
bounds     := expr ":" expr ;
equation   := name "[" [ index { "," index } ] "]" "=" formula ;
index      := "all" name | name cmp expr | name ( "+" | "-" ) expr | expr ;
cmp        := ">" | "<" | ">=" | "<=" | "=" ;
mapentry   := name "to" addr "by" orientation ;
addr       := cell | "(" addr ")" | addr "+" "vector" "(" expr "," expr ")" ;
cell       := sheet "!" "$"? column "$"? rownumber ;
format     := ( "row" "(" items ")" | "grid" "(" "[" items { "," items } "]" ")" ) "@" addr ;
items      := "[" [ item { "," item } ] "]" ;
item       := text | "skip" [ "(" expr "," expr ")" ] | name "by" orientation ;
orientation:= "yx" | "xy" | "y" | "x" ;
formula    := Excel-style expression: numbers, "strings", table[indices],
              Sheet!A1 references and ranges, + - * / & comparisons,
              unary minus, SUM | COUNTIF | IF | MIN | MAX calls ;
expr       := integer arithmetic over numbers and size parameters ;
text       := "'" characters "'" ;
comment    := "--" to end of line ;
"""


# --------------------------------------------------------------------------
# template values (concrete after fold_* substitutes size parameters)

@dataclass(frozen=True, slots=True)
class IndexT:
    """Template index: `var` (+ offset expr), or a pure expression."""

    var: str | None
    offset: Formula


@dataclass(frozen=True, slots=True)
class QuantT:
    var: str
    op: str
    bound: Formula | None


@dataclass(frozen=True, slots=True)
class ElementRefT:
    table: str
    indices: tuple[IndexT, ...]


@dataclass(frozen=True, slots=True)
class DeclT:
    name: str
    dims: tuple[tuple[Formula, Formula], ...]


@dataclass(frozen=True, slots=True)
class EquationT:
    table: str
    indices: tuple[QuantT | IndexT, ...]
    rhs: Formula


@dataclass(frozen=True, slots=True)
class ObjectLit:
    decls: tuple[DeclT, ...]
    equations: tuple[EquationT, ...]


@dataclass(frozen=True, slots=True)
class CallExpr:
    name: str
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class UnionExpr:
    left: "ObjExpr"
    right: "ObjExpr"


@dataclass(frozen=True, slots=True)
class AddrT:
    """A constant cell plus a chain of `+ vector(dx, dy)` shifts."""

    sheet: str
    col: int
    row: int
    shifts: tuple[tuple[Formula, Formula], ...] = ()


@dataclass(frozen=True, slots=True)
class MapEntryT:
    table: str
    addr: AddrT
    orient: str


@dataclass(frozen=True, slots=True)
class MappingExpr:
    base: "ObjExpr"
    entries: tuple[MapEntryT, ...]


ObjExpr = ObjectLit | CallExpr | UnionExpr | MappingExpr


@dataclass(frozen=True, slots=True)
class PlaceT:
    table: str
    orient: str


@dataclass(frozen=True, slots=True)
class TextT:
    text: str


@dataclass(frozen=True, slots=True)
class SkipT:
    w: Formula
    h: Formula


ItemT = PlaceT | TextT | SkipT


@dataclass(frozen=True, slots=True)
class FormatT:
    rows: tuple[tuple[ItemT, ...], ...]
    anchor: AddrT


@dataclass(frozen=True, slots=True)
class FunctionDef:
    name: str
    params: tuple[str, ...]
    body: ObjExpr


@dataclass(frozen=True, slots=True)
class Program:
    definitions: tuple[FunctionDef, ...]
    top_expr: ObjExpr | None
    layout: tuple[FormatT, ...]


# --------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<number>[0-9]+(?:\.[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<dq>"(?:[^"]|"")*")
  | (?P<sq>'(?:[^']|'')*')
  | (?P<punct>\{\#|\#\}|<=|>=|<>|\\/|[\[\](),|:=!@$+\-*/&<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # ident number string text punct eof
    value: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, bol = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise Diagnostic(f"unexpected character {src[pos]!r}", line, pos - bol + 1)
        col = pos - bol + 1
        pos = m.end()
        kind = m.lastgroup
        text = m.group()
        if kind in ("ws", "comment"):
            line += text.count("\n")
            if "\n" in text:
                bol = m.start() + text.rindex("\n") + 1
            continue
        if kind == "dq":
            tokens.append(Token("string", text[1:-1].replace('""', '"'), line, col))
        elif kind == "sq":
            tokens.append(Token("text", text[1:-1].replace("''", "'"), line, col))
        elif kind == "number":
            tokens.append(Token("number", text, line, col))
        elif kind == "ident":
            tokens.append(Token("ident", text, line, col))
        else:
            tokens.append(Token("punct", text, line, col))
    tokens.append(Token("eof", "", line, len(src) - bol + 1))
    return tokens


class Parser:
    def __init__(self, src: str):
        self.tokens = tokenize(src)
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, *what: str) -> bool:
        t = self.tok
        return t.value in what if t.kind in ("punct", "ident") else t.kind in what

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def accept(self, *what: str) -> Token | None:
        if self.at(*what):
            return self.advance()
        return None

    def expect(self, *what: str) -> Token:
        if self.at(*what):
            return self.advance()
        t = self.tok
        got = t.value or t.kind
        raise Diagnostic(f"unexpected {got!r}", t.line, t.col, expected=what)

    def ident(self, role: str = "name") -> str:
        t = self.tok
        if t.kind != "ident" or t.value in KEYWORDS:
            raise Diagnostic(f"expected {role}, got {t.value or t.kind!r}",
                             t.line, t.col, expected=(role,))
        self.advance()
        return t.value

    def fail(self, message: str, expected: tuple[str, ...] = ()):
        t = self.tok
        raise Diagnostic(message, t.line, t.col, expected=expected)

    # -- programs -----------------------------------------------------------

    def program(self) -> Program:
        defs: list[FunctionDef] = []
        while self.at("let"):
            defs.append(self.definition())
        top = None
        if not self.at("eof", "row", "grid"):
            top = self.obj_expr()
        formats: list[FormatT] = []
        while self.at("row", "grid"):
            formats.append(self.format_clause())
        self.expect("eof")
        program = Program(tuple(defs), top, tuple(formats))
        self._validate(program)
        return program

    def _validate(self, program: Program) -> None:
        defs: dict[str, FunctionDef] = {}
        for d in program.definitions:
            if d.name in defs:
                raise ModelError(f"function {d.name!r} defined twice")
            defs[d.name] = d

        def check(expr: ObjExpr) -> None:
            if isinstance(expr, CallExpr):
                if expr.name not in defs:
                    raise ModelError(f"call of undefined function {expr.name!r}")
                arity = len(defs[expr.name].params)
                if len(expr.args) != arity:
                    raise ModelError(
                        f"{expr.name} takes {arity} argument(s), got {len(expr.args)}"
                    )
            elif isinstance(expr, UnionExpr):
                check(expr.left)
                check(expr.right)
            elif isinstance(expr, MappingExpr):
                check(expr.base)

        for d in program.definitions:
            check(d.body)
        if program.top_expr is not None:
            check(program.top_expr)

    def definition(self) -> FunctionDef:
        self.expect("let")
        name = self.ident("function name")
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.ident("parameter"))
            while self.accept(","):
                params.append(self.ident("parameter"))
        self.expect(")")
        self.expect("be")
        body = self.obj_expr()
        return FunctionDef(name, tuple(params), body)

    def obj_expr(self) -> ObjExpr:
        expr = self.obj_primary()
        while self.at("union", "\\/"):
            self.advance()
            expr = UnionExpr(expr, self.obj_primary())
        while self.at("mapping"):
            self.advance()
            entries = [self.map_entry()]
            while self.accept(","):
                entries.append(self.map_entry())
            expr = MappingExpr(expr, tuple(entries))
        return expr

    def obj_primary(self) -> ObjExpr:
        if self.at("{#"):
            return self.object_literal()
        if self.accept("("):
            inner = self.obj_expr()
            self.expect(")")
            return inner
        name = self.ident("object or function name")
        self.expect("(")
        args: list[Formula] = []
        if not self.at(")"):
            args.append(self.formula())
            while self.accept(","):
                args.append(self.formula())
        self.expect(")")
        return CallExpr(name, tuple(args))

    def map_entry(self) -> MapEntryT:
        table = self.ident("table name")
        self.expect("to")
        addr = self.addr_expr()
        self.expect("by")
        return MapEntryT(table, addr, self.orientation())

    def orientation(self) -> str:
        t = self.tok
        if t.kind == "ident" and t.value in ORIENTATIONS:
            self.advance()
            return t.value
        raise Diagnostic("expected an orientation", t.line, t.col,
                         expected=ORIENTATIONS)

    # -- objects ------------------------------------------------------------

    def object_literal(self) -> ObjectLit:
        self.expect("{#")
        decls: list[DeclT] = []
        if not self.at("|"):
            decls.append(self.decl())
            while self.accept(","):
                decls.append(self.decl())
        self.expect("|")
        equations: list[EquationT] = []
        if not self.at("#}"):
            equations.append(self.equation())
            while self.accept(","):
                equations.append(self.equation())
        self.expect("#}")
        return ObjectLit(tuple(decls), tuple(equations))

    def decl(self) -> DeclT:
        name = self.ident("table name")
        self.expect("[")
        dims: list[tuple[Formula, Formula]] = []
        if not self.at("]"):
            dims.append(self.bounds())
            while self.accept(","):
                dims.append(self.bounds())
        self.expect("]")
        return DeclT(name, tuple(dims))

    def bounds(self) -> tuple[Formula, Formula]:
        lo = self.formula()
        self.expect(":")
        return lo, self.formula()

    def equation(self) -> EquationT:
        table = self.ident("table name")
        self.expect("[")
        indices: list[QuantT | IndexT] = []
        if not self.at("]"):
            indices.append(self.lhs_index())
            while self.accept(","):
                indices.append(self.lhs_index())
        self.expect("]")
        self.expect("=")
        return EquationT(table, tuple(indices), self.formula())

    def lhs_index(self) -> QuantT | IndexT:
        if self.accept("all"):
            return QuantT(self.ident("variable"), "all", None)
        if self.tok.kind == "ident" and self.tok.value not in KEYWORDS:
            name = self.advance().value
            for op in (">=", "<=", ">", "<", "="):
                if self.accept(op):
                    return QuantT(name, op, self.formula())
            if self.accept("+"):
                return IndexT(name, self.formula())
            if self.accept("-"):
                return IndexT(name, Neg(self.formula()))
            return IndexT(name, Num(0))
        return IndexT(None, self.formula())

    def rhs_index(self) -> IndexT:
        ix = self.lhs_index()
        if isinstance(ix, QuantT):
            self.fail("quantifier constraints are only allowed on the left-hand side")
        return ix

    # -- formulas -----------------------------------------------------------

    def formula(self) -> Formula:
        left = self.concat_expr()
        while True:
            op = None
            for candidate in ("<=", ">=", "<>", "<", ">", "="):
                if self.at(candidate):
                    op = candidate
                    break
            if op is None:
                return left
            self.advance()
            left = BinOp(op, left, self.concat_expr())

    def concat_expr(self) -> Formula:
        left = self.add_expr()
        while self.accept("&"):
            left = BinOp("&", left, self.add_expr())
        return left

    def add_expr(self) -> Formula:
        left = self.mul_expr()
        while self.at("+", "-"):
            op = self.advance().value
            left = BinOp(op, left, self.mul_expr())
        return left

    def mul_expr(self) -> Formula:
        left = self.unary_expr()
        while self.at("*", "/"):
            op = self.advance().value
            left = BinOp(op, left, self.unary_expr())
        return left

    def unary_expr(self) -> Formula:
        if self.accept("-"):
            return Neg(self.unary_expr())
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.value))
        if t.kind == "string":
            self.advance()
            return Str(t.value)
        if t.kind == "text":
            # quoted sheet name of a cell reference
            self.advance()
            self.expect("!")
            return self.cell_suffix(t.value)
        if self.accept("("):
            inner = self.formula()
            self.expect(")")
            return inner
        if t.kind == "ident":
            if t.value in KEYWORDS and t.value != "vector":
                self.fail(f"unexpected keyword {t.value!r} in formula")
            name = self.advance().value
            if self.accept("!"):
                return self.cell_suffix(name)
            if self.at("["):
                self.advance()
                indices: list[IndexT] = []
                if not self.at("]"):
                    indices.append(self.rhs_index())
                    while self.accept(","):
                        indices.append(self.rhs_index())
                self.expect("]")
                return ElementRefT(name, tuple(indices))
            if self.at("("):
                if name.upper() not in model.FUNCTIONS:
                    self.fail(f"unknown function {name!r}",
                              expected=model.FUNCTIONS)
                self.advance()
                args: list[Formula] = []
                if not self.at(")"):
                    args.append(self.formula())
                    while self.accept(","):
                        args.append(self.formula())
                self.expect(")")
                return Call(name.upper(), tuple(args))
            return NameRef(name)
        self.fail("expected a formula", expected=("number", "string", "name", "("))

    def cell_suffix(self, sheet: str) -> Formula:
        start = self.cell_body(sheet)
        if self.accept(":"):
            if self.tok.kind == "text" or (self.tok.kind == "ident"
                                           and self.tokens[self.pos + 1].value == "!"):
                end_sheet = self.advance().value
                self.expect("!")
                end = self.cell_body(end_sheet)
            else:
                end = self.cell_body(sheet)
            return RangeRef(start, end)
        return start

    def cell_body(self, sheet: str) -> CellRef:
        col_abs = bool(self.accept("$"))
        t = self.tok
        if t.kind != "ident":
            self.fail("expected a cell like D8")
        self.advance()
        m = re.fullmatch(r"([A-Za-z]{1,3})([0-9]+)?", t.value)
        if m is None:
            self.fail(f"bad cell reference {t.value!r}")
        letters, digits = m.groups()
        if digits is not None:
            if self.at("$"):
                self.fail("absolute row marker must precede the row number")
            return CellRef(sheet, col_number(letters), int(digits), col_abs, False)
        row_abs = bool(self.accept("$"))
        row = self.expect("number")
        if "." in row.value:
            self.fail("row number must be an integer")
        return CellRef(sheet, col_number(letters), int(row.value), col_abs, row_abs)

    # -- addresses and layout formats ----------------------------------------

    def addr_expr(self) -> AddrT:
        if self.accept("("):
            base = self.addr_expr()
            self.expect(")")
        else:
            t = self.tok
            if t.kind == "text":
                self.advance()
                sheet = t.value
            else:
                sheet = self.ident("sheet name")
            self.expect("!")
            cell = self.cell_body(sheet)
            base = AddrT(sheet, cell.col, cell.row)
        shifts = list(base.shifts)
        while self.at("+"):
            self.advance()
            self.expect("vector")
            self.expect("(")
            dx = self.formula()
            self.expect(",")
            dy = self.formula()
            self.expect(")")
            shifts.append((dx, dy))
        return AddrT(base.sheet, base.col, base.row, tuple(shifts))

    def format_clause(self) -> FormatT:
        kw = self.advance().value
        self.expect("(")
        if kw == "row":
            rows = (tuple(self.item_list()),)
        else:
            self.expect("[")
            rows_list = [tuple(self.item_list())]
            while self.accept(","):
                rows_list.append(tuple(self.item_list()))
            self.expect("]")
            rows = tuple(rows_list)
        self.expect(")")
        self.expect("@")
        return FormatT(rows, self.addr_expr())

    def item_list(self) -> list[ItemT]:
        self.expect("[")
        items: list[ItemT] = []
        if not self.at("]"):
            items.append(self.item())
            while self.accept(","):
                items.append(self.item())
        self.expect("]")
        return items

    def item(self) -> ItemT:
        t = self.tok
        if t.kind == "text":
            self.advance()
            return TextT(t.value)
        if self.accept("skip"):
            if self.accept("("):
                w = self.formula()
                self.expect(",")
                h = self.formula()
                self.expect(")")
                return SkipT(w, h)
            return SkipT(Num(1), Num(0))
        name = self.ident("table name")
        self.expect("by")
        return PlaceT(name, self.orientation())


# --------------------------------------------------------------------------
# folding templates to concrete values

def fold_int(f: Formula, env: dict[str, int], where: str) -> int:
    v = _fold_num(f, env, where)
    if v != int(v):
        raise ModelError(f"{where}: expected an integer, got {v}")
    return int(v)


def _fold_num(f: Formula, env: dict[str, int], where: str) -> float:
    if isinstance(f, Num):
        return f.value
    if isinstance(f, NameRef):
        if f.name not in env:
            raise ModelError(f"{where}: unknown name {f.name!r}")
        return env[f.name]
    if isinstance(f, Neg):
        return -_fold_num(f.operand, env, where)
    if isinstance(f, BinOp) and f.op in "+-*/":
        a = _fold_num(f.left, env, where)
        b = _fold_num(f.right, env, where)
        if f.op == "+":
            return a + b
        if f.op == "-":
            return a - b
        if f.op == "*":
            return a * b
        if b == 0:
            raise ModelError(f"{where}: division by zero")
        return a / b
    raise ModelError(f"{where}: not a constant expression")


def fold_formula(f: Formula, env: dict[str, int], qvars: frozenset[str]) -> Formula:
    """Substitute size parameters; quantified variables survive."""
    if isinstance(f, NameRef):
        if f.name in qvars:
            return f
        if f.name in env:
            return Num(float(env[f.name]))
        raise ModelError(f"unknown name {f.name!r} in formula")
    if isinstance(f, ElementRefT):
        return model.ElementRef(
            f.table, tuple(_fold_index(ix, env, qvars) for ix in f.indices)
        )
    if isinstance(f, BinOp):
        return BinOp(f.op, fold_formula(f.left, env, qvars),
                     fold_formula(f.right, env, qvars))
    if isinstance(f, Neg):
        inner = fold_formula(f.operand, env, qvars)
        if isinstance(inner, Num):
            return Num(-inner.value)
        return Neg(inner)
    if isinstance(f, Call):
        return Call(f.name, tuple(fold_formula(a, env, qvars) for a in f.args))
    return f


def _fold_index(ix: IndexT, env: dict[str, int], qvars: frozenset[str]) -> Index:
    if ix.var is None:
        return Index(None, fold_int(ix.offset, env, "index"))
    off = fold_int(ix.offset, env, f"offset of {ix.var}")
    if ix.var in qvars:
        return Index(ix.var, off)
    if ix.var in env:
        return Index(None, env[ix.var] + off)
    raise ModelError(f"unbound variable {ix.var!r} in index")


def fold_object(lit: ObjectLit, env: dict[str, int]) -> Object:
    tables = []
    for d in lit.decls:
        dims = []
        for pos, (lo_e, hi_e) in enumerate(d.dims):
            lo = fold_int(lo_e, env, f"{d.name} bounds")
            hi = fold_int(hi_e, env, f"{d.name} bounds")
            if lo > hi:
                from .errors import EmptyDimensionError
                raise EmptyDimensionError(d.name, pos, lo, hi)
            dims.append(model.Bounds(lo, hi))
        tables.append(TableDecl(d.name, tuple(dims)))

    equations = []
    for eq in lit.equations:
        qvars = frozenset(ix.var for ix in eq.indices if isinstance(ix, QuantT))
        lhs: list[model.LhsIndex] = []
        for ix in eq.indices:
            if isinstance(ix, QuantT):
                bound = None if ix.bound is None else fold_int(
                    ix.bound, env, f"constraint on {ix.var}")
                lhs.append(Quantifier(ix.var, ix.op, bound))
            else:
                folded = _fold_index(ix, env, frozenset())
                lhs.append(folded.offset)
        rhs = fold_formula(eq.rhs, env, qvars)
        equations.append(Equation(eq.table, tuple(lhs), rhs))
    return Object(tables, equations)


def fold_addr(addr: AddrT, env: dict[str, int]) -> CellAddr:
    col, row = addr.col, addr.row
    for dx_e, dy_e in addr.shifts:
        col += fold_int(dx_e, env, "vector")
        row += fold_int(dy_e, env, "vector")
    if col < 1 or row < 1:
        from .errors import AddressUnderflowError
        raise AddressUnderflowError(f"address arithmetic left the grid on {addr.sheet}")
    return CellAddr(addr.sheet, col, row)


# --------------------------------------------------------------------------
# entry points

def parse_program(text: str) -> Program:
    return Parser(text).program()


def parse_object(text: str) -> Object:
    """Parse a single object literal with no free size parameters."""
    p = Parser(text)
    lit = p.object_literal()
    p.expect("eof")
    return fold_object(lit, {})


def parse_model_formula(text: str) -> Formula:
    """Parse one model-space formula; bare names stay as variables."""
    p = Parser(text)
    f = p.formula()
    p.expect("eof")
    return fold_formula(f, {}, _free_vars(f))


def _free_vars(f: Formula) -> frozenset[str]:
    names: set[str] = set()

    def go(node):
        if isinstance(node, NameRef):
            names.add(node.name)
        elif isinstance(node, ElementRefT):
            for ix in node.indices:
                if ix.var is not None:
                    names.add(ix.var)
                go(ix.offset)
        elif isinstance(node, BinOp):
            go(node.left)
            go(node.right)
        elif isinstance(node, Neg):
            go(node.operand)
        elif isinstance(node, Call):
            for a in node.args:
                go(a)

    go(f)
    return frozenset(names)


# --------------------------------------------------------------------------
# printing

def format_model_formula(f: Formula) -> str:
    def atom(node) -> str:
        if isinstance(node, model.ElementRef):
            return f"{node.table}[{', '.join(_fmt_index(ix) for ix in node.indices)}]" \
                if node.indices else f"{node.table}[]"
        if isinstance(node, CellRef):
            return a1_format(node)
        if isinstance(node, RangeRef):
            return f"{a1_format(node.start)}:{_range_end(node)}"
        raise ModelError(f"cannot print {node!r} in model notation")

    return format_formula(f, atom)


def _range_end(node: RangeRef) -> str:
    end = node.end
    if end.sheet == node.start.sheet:
        end = CellRef(None, end.col, end.row, end.col_abs, end.row_abs)
    return a1_format(end)


def _fmt_index(ix: Index) -> str:
    if ix.var is None:
        return str(ix.offset)
    if ix.offset == 0:
        return ix.var
    sign = "+" if ix.offset > 0 else "-"
    return f"{ix.var}{sign}{abs(ix.offset)}"


def _fmt_lhs_index(ix: model.LhsIndex) -> str:
    if isinstance(ix, Quantifier):
        if ix.op == "all":
            return f"all {ix.var}"
        return f"{ix.var}{ix.op}{ix.bound}"
    return str(ix)


def format_equation(eq: Equation) -> str:
    idx = ", ".join(_fmt_lhs_index(ix) for ix in eq.lhs_indices)
    return f"{eq.lhs_table}[{idx}] = {format_model_formula(eq.rhs)}"


def format_decl(t: TableDecl) -> str:
    dims = ", ".join(f"{b.lo}:{b.hi}" for b in t.dims)
    return f"{t.name}[{dims}]"


def show_object(o: Object) -> str:
    """Deterministic canonical listing; parses back to an equal Object."""
    decls = [format_decl(t) for t in o.tables.values()]
    eqs = sorted(format_equation(eq) for eq in o.equations)
    lines = ["{#"]
    for i, d in enumerate(decls):
        lines.append("  " + d + ("," if i < len(decls) - 1 else ""))
    lines.append("|")
    for i, e in enumerate(eqs):
        lines.append("  " + e + ("," if i < len(eqs) - 1 else ""))
    lines.append("#}")
    return "\n".join(lines) + "\n"

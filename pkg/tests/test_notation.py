"""Model-notation parsing, printing, and their round trip."""
import pytest
from hypothesis import given, settings, strategies as st

from sheetforge import notation
from sheetforge.errors import Diagnostic, SheetError
from sheetforge.model import (
    BinOp, Bounds, Call, CellRef, ElementRef, Equation, Index, NameRef, Neg,
    Num, Object, Quantifier, RangeRef, Str, TableDecl,
)
from sheetforge.notation import (
    CallExpr, MappingExpr, UnionExpr, parse_object, parse_program, show_object,
)


def test_parse_union_operand():
    o = parse_object("{# a[1:1], b[1:1] | a[1]=b[1] #}")
    assert set(o.tables) == {"a", "b"}
    assert len(o.equations) == 1
    assert o.equations[0] == Equation("a", (1,), ElementRef("b", (Index(None, 1),)))


def test_parse_scalar_object():
    o = parse_object("{# c[] | c[] = 5 #}")
    assert o.tables["c"].dims == ()
    assert o.equations[0] == Equation("c", (), Num(5.0))


def test_parse_newstock_object():
    o = parse_object("""
        {#
          NewStock[ 2000:2010, 1:20 ],
          Builds[ 2000:2010, 1:20 ],
          Demolitions[ 2000:2010, 1:20 ]
        |
          NewStock[ all y, all dt ] = Builds[ y, dt ] - Demolitions[ y, dt ]
        #}
    """)
    assert len(o.tables) == 3
    for t in o.tables.values():
        assert t.dims == (Bounds(2000, 2010), Bounds(1, 20))
    assert len(o.equations) == 1
    eq = o.equations[0]
    assert eq.lhs_indices == (Quantifier("y"), Quantifier("dt"))


def test_parse_bounded_quantifier_and_offsets():
    o = parse_object("""
        {# NewStock[2000:2010, 1:20] |
           NewStock[ 2000, all dt ] = 0,
           NewStock[ y>2000, all dt ] = NewStock[ y-1, dt ]
        #}
    """)
    assert len(o.equations) == 2
    constrained = [eq for eq in o.equations
                   if any(isinstance(ix, Quantifier) and ix.op == ">"
                          for ix in eq.lhs_indices)]
    assert len(constrained) == 1
    rhs = constrained[0].rhs
    assert rhs == ElementRef("NewStock", (Index("y", -1), Index("dt", 0)))


def test_comments_and_whitespace_insensitive():
    a = parse_object("{# a[1:2] | a[1]=1, a[2]=2 #}")
    b = parse_object("{#  -- tables\n a[ 1 : 2 ]\n|\n a[1] = 1, -- first\n a[2]=2 #}")
    assert a == b


def test_parse_minimal_program():
    p = parse_program("let m(a) be {# t[1:a] | t[all i] = i #}  m(3)")
    assert len(p.definitions) == 1
    assert p.definitions[0].params == ("a",)
    assert isinstance(p.top_expr, CallExpr)
    assert p.top_expr.name == "m"
    assert len(p.top_expr.args) == 3 - 2  # one literal argument


def test_parse_model_call_args():
    p = parse_program(
        "let model(S, E, N) be {# t[S:E, 1:N] | t[all y, all d] = 0 #} "
        "model( 2000, 2040, 20 )")
    assert [a.value for a in p.top_expr.args] == [2000.0, 2040.0, 20.0]


def test_parse_union_forms():
    for op in ("union", "\\/"):
        p = parse_program(f"{{# a[] | a[]=1 #}} {op} {{# b[] | b[]=2 #}}")
        assert isinstance(p.top_expr, UnionExpr)


def test_parse_mapping_clause():
    p = parse_program(
        "{# Lettings[2000:2010, 1:20] | Lettings[all y, all dt] = 0 #} "
        "mapping Lettings to Lets!D8 by yx")
    assert isinstance(p.top_expr, MappingExpr)
    entry = p.top_expr.entries[0]
    assert (entry.table, entry.orient) == ("Lettings", "yx")
    assert (entry.addr.sheet, entry.addr.col, entry.addr.row) == ("Lets", 4, 8)


def test_parse_mapping_with_vector():
    p = parse_program(
        "let m(N) be {# A[1:N] | A[all i]=0 #} "
        "mapping A to (Lets!D8) + vector(N+1, 0) by y\n m(20)")
    body = p.definitions[0].body
    assert isinstance(body, MappingExpr)
    assert len(body.entries[0].addr.shifts) == 1


def test_parse_format_clauses():
    p = parse_program("""
        {# Lettings[2000:2010, 1:20], Sales[2000:2010] |
           Lettings[all y, all d] = 0, Sales[all y] = 1 #}
        row( [ Lettings by yx, skip, Sales by y ] ) @ Lets!D8
        grid( [ [ 'STOCK MODEL' ], [ skip(0,3) ] ] ) @ Lets!A1
    """)
    assert len(p.layout) == 2
    row_fmt = p.layout[0]
    assert len(row_fmt.rows) == 1
    assert isinstance(row_fmt.rows[0][0], notation.PlaceT)
    assert isinstance(row_fmt.rows[0][1], notation.SkipT)
    grid_fmt = p.layout[1]
    assert isinstance(grid_fmt.rows[0][0], notation.TextT)
    assert grid_fmt.rows[0][0].text == "STOCK MODEL"


def test_quoted_item_is_always_text():
    p = parse_program(
        "{# Years[1:3] | Years[all y] = 0 #}\n"
        "grid( [ [ 'Years by y' ] ] ) @ L!A1")
    item = p.layout[0].rows[0][0]
    assert isinstance(item, notation.TextT)
    assert item.text == "Years by y"


def test_unknown_function_and_arity_errors():
    with pytest.raises(SheetError):
        parse_program("m(3)")
    with pytest.raises(SheetError):
        parse_program("let m(a) be {# t[1:a] | t[all i]=0 #} m(1, 2)")


def test_duplicate_table_with_conflicting_dims():
    with pytest.raises(SheetError):
        parse_object("{# a[1:2], a[1:2, 1:2] | a[1]=0 #}")


def test_syntax_error_is_positioned():
    with pytest.raises(Diagnostic) as err:
        parse_object("{# a[1:2 | a[1]=1 #}")
    assert err.value.line == 1
    assert err.value.col is not None
    assert err.value.expected


def test_show_empty_object():
    assert show_object(Object((), ())) == "{#\n|\n#}\n"


def test_show_roundtrip_union_result():
    o = parse_object("{# a[1:2], b[1:3], c[] | a[1]=b[1], c[]=a[2], a[2]=a[1] #}")
    assert parse_object(show_object(o)) == o


def test_show_sorts_equations():
    o = parse_object(
        "{# t[1:10] | t[9]=9, t[1]=1, t[10]=10, t[2]=2, t[3]=3, "
        "t[4]=4, t[5]=5, t[6]=6, t[7]=7, t[8]=8 #}")
    lines = [l.strip().rstrip(",") for l in show_object(o).splitlines()]
    eq_lines = [l for l in lines if "=" in l]
    assert eq_lines == sorted(eq_lines)
    assert len(eq_lines) == 10


def test_grammar_text_present():
    assert "objexpr" in notation.GRAMMAR
    assert "{#" in notation.GRAMMAR


# --------------------------------------------------------------------------
# generated objects round-trip through show/parse

_names = st.sampled_from(["a", "b2", "Tbl", "x_y", "NewStock", "yx"])
_vars = st.sampled_from(["i", "j", "y", "dt"])


@st.composite
def objects(draw) -> Object:
    names = draw(st.lists(_names, min_size=1, max_size=3, unique=True))
    tables = {}
    for name in names:
        ndims = draw(st.integers(0, 2))
        dims = []
        for _ in range(ndims):
            lo = draw(st.integers(-5, 2005))
            dims.append(Bounds(lo, lo + draw(st.integers(0, 15))))
        tables[name] = TableDecl(name, tuple(dims))

    def formula(depth, qvars):
        choice = draw(st.integers(0, 6 if depth < 2 else 2))
        if choice == 0:
            return Num(float(draw(st.integers(-999, 999))))
        if choice == 1:
            return Str(draw(st.text(
                alphabet=st.characters(min_codepoint=32, max_codepoint=126),
                max_size=6)))
        if choice == 2:
            target = tables[draw(st.sampled_from(sorted(tables)))]
            indices = []
            for b in target.dims:
                if qvars and draw(st.booleans()):
                    indices.append(Index(draw(st.sampled_from(sorted(qvars))),
                                         draw(st.integers(-3, 3))))
                else:
                    indices.append(Index(None, draw(st.integers(b.lo, b.hi))))
            return ElementRef(target.name, tuple(indices))
        if choice == 3:
            op = draw(st.sampled_from(["+", "-", "*", "/", "&", "=", "<", ">="]))
            return BinOp(op, formula(depth + 1, qvars), formula(depth + 1, qvars))
        if choice == 4:
            inner = formula(depth + 1, qvars)
            return Num(-inner.value) if isinstance(inner, Num) else Neg(inner)
        if choice == 5:
            return Call(draw(st.sampled_from(["SUM", "MIN", "IF"])),
                        tuple(formula(depth + 1, qvars)
                              for _ in range(draw(st.integers(1, 3)))))
        return CellRef(draw(st.sampled_from(["Raw", "My Sheet"])),
                       draw(st.integers(1, 40)), draw(st.integers(1, 40)),
                       draw(st.booleans()), draw(st.booleans()))

    equations = []
    for _ in range(draw(st.integers(0, 4))):
        table = tables[draw(st.sampled_from(sorted(tables)))]
        lhs = []
        qvars = []
        for b in table.dims:
            if draw(st.booleans()):
                var = draw(_vars)
                while var in qvars:
                    var += "x"
                qvars.append(var)
                op = draw(st.sampled_from(["all", ">", "<", "=", ">=", "<="]))
                bound = None if op == "all" else draw(st.integers(b.lo - 2, b.hi + 2))
                lhs.append(Quantifier(var, op, bound))
            else:
                lhs.append(draw(st.integers(b.lo, b.hi)))
        equations.append(Equation(table.name, tuple(lhs), formula(0, qvars)))
    return Object(tables.values(), equations)


@settings(max_examples=150, deadline=None)
@given(objects())
def test_parse_show_roundtrip(o):
    assert parse_object(show_object(o)) == o


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=60))
def test_parsing_is_total(text):
    try:
        parse_program(text)
    except SheetError:
        pass  # positioned diagnostic or semantic error; never a crash

"""Union, size instantiation, expansion, and the table-to-sheet rewrite."""
import itertools

import pytest
from hypothesis import given, settings, strategies as st

from sheetforge import algebra, build, evaluator, notation
from sheetforge.algebra import (
    MapEntry, MappingSpec, apply_function, element_addr, expand,
    instance_count, map_table, union,
)
from sheetforge.errors import (
    MappingError, MultipleDefinitionError, OutOfBoundsError, UnionError,
)
from sheetforge.model import (
    Bounds, CellAddr, ElementRef, Equation, Index, Num, Object, TableDecl,
    a1_format,
)
from sheetforge.notation import parse_object, parse_program

from conftest import LAYOUT_FLIPPED, LAYOUT_ORIGINAL, MINI_MODEL_DEF


# --------------------------------------------------------------------------
# union

def test_union_worked_example():
    a = parse_object("{# a[1:1], b[1:1] | a[1]=b[1] #}")
    b = parse_object("{# a[1:2], b[2:3], c[] | c[]=a[2], a[2]=a[1] #}")
    expected = parse_object(
        "{# a[1:2], b[1:3], c[] | a[1]=b[1], c[]=a[2], a[2]=a[1] #}")
    assert union(a, b) == expected


def test_union_idempotent_and_empty_identity():
    o = parse_object("{# a[1:2] | a[1]=1, a[2]=a[1] #}")
    empty = Object((), ())
    assert union(o, o) == o
    assert union(o, empty) == o
    assert union(empty, o) == o


def test_union_dimension_mismatch():
    a = parse_object("{# t[1:2] | t[1]=0 #}")
    b = parse_object("{# t[1:2, 1:2] | t[1,1]=0 #}")
    with pytest.raises(UnionError):
        union(a, b)


_small_objects = st.builds(
    lambda pairs, eqs: _make_object(pairs, eqs),
    st.lists(st.tuples(st.sampled_from("abc"), st.integers(1, 3), st.integers(0, 2)),
             min_size=1, max_size=3),
    st.lists(st.tuples(st.sampled_from("abc"), st.integers(1, 3)), max_size=3),
)


def _make_object(pairs, eqs):
    tables = {}
    for name, lo, extra in pairs:
        tables.setdefault(name, TableDecl(name, (Bounds(lo, lo + extra),)))
    equations = []
    for name, k in eqs:
        if name in tables and k in tables[name].dims[0]:
            equations.append(Equation(name, (k,), Num(float(k))))
    return Object(tables.values(), equations)


@settings(max_examples=100, deadline=None)
@given(_small_objects, _small_objects, _small_objects)
def test_union_laws(a, b, c):
    assert union(a, b) == union(b, a)
    assert union(union(a, b), c) == union(a, union(b, c))
    assert union(a, a) == a


# --------------------------------------------------------------------------
# function application

MODEL_DEF = """
let model( StartYear, EndYear, NumberOfDwellingTypes ) be
{#
  NewStock[ StartYear:EndYear, 1:NumberOfDwellingTypes ],
  Builds[ StartYear:EndYear, 1:NumberOfDwellingTypes ],
  Demolitions[ StartYear:EndYear, 1:NumberOfDwellingTypes ]
|
  NewStock[ all y, all dt ] = Builds[ y, dt ] - Demolitions[ y, dt ]
#}
"""


def test_apply_function_sizes():
    prog = parse_program(MODEL_DEF)
    obj = apply_function(prog.definitions[0], [2000, 2040, 20])
    for t in ("NewStock", "Builds", "Demolitions"):
        assert obj.tables[t].dims == (Bounds(2000, 2040), Bounds(1, 20))


def test_apply_function_minimal_size_one_instance_each():
    prog = parse_program(MODEL_DEF)
    obj = apply_function(prog.definitions[0], [2000, 2000, 1])
    expanded = expand(obj)
    # enumeration oracle: every quantified equation instantiates once
    assert len(expanded.cells) == 1
    assert ("NewStock", (2000, 1)) in expanded.cells


def test_apply_function_zero_params():
    prog = parse_program("let k() be {# t[1:2] | t[all i] = 7 #} k()")
    obj = apply_function(prog.definitions[0], [])
    assert obj == parse_object("{# t[1:2] | t[all i] = 7 #}")


def test_apply_function_empty_dimension():
    from sheetforge.errors import EmptyDimensionError
    prog = parse_program(MODEL_DEF)
    with pytest.raises(EmptyDimensionError):
        apply_function(prog.definitions[0], [2010, 2000, 5])


# --------------------------------------------------------------------------
# expansion

def test_expand_two_years():
    obj = parse_object("""
        {# NewStock[2000:2001, 1:1], Builds[2000:2001, 1:1],
           Demolitions[2000:2001, 1:1] |
           NewStock[all y, all dt] = Builds[y, dt] - Demolitions[y, dt],
           Builds[all y, all dt] = 1, Demolitions[all y, all dt] = 2 #}
    """)
    e = expand(obj)
    newstock = {k: v for k, v in e.cells.items() if k[0] == "NewStock"}
    assert set(newstock) == {("NewStock", (2000, 1)), ("NewStock", (2001, 1))}
    from sheetforge.model import BinOp
    assert newstock[("NewStock", (2000, 1))] == BinOp(
        "-", ElementRef("Builds", (Index(None, 2000), Index(None, 1))),
        ElementRef("Demolitions", (Index(None, 2000), Index(None, 1))))


def test_expand_initial_value_split():
    obj = parse_object("""
        {# NewStock[2000:2002, 1:2], Builds[2000:2002, 1:2],
           Demolitions[2000:2002, 1:2] |
           NewStock[2000, all dt] = 0,
           NewStock[y>2000, all dt] = NewStock[y-1, dt] + Builds[y, dt] - Demolitions[y, dt],
           Builds[all y, all dt] = 1, Demolitions[all y, all dt] = 2 #}
    """)
    e = expand(obj)
    zero_eqs = [k for k, v in e.cells.items()
                if k[0] == "NewStock" and v == Num(0.0)]
    recur_eqs = [k for k, v in e.cells.items()
                 if k[0] == "NewStock" and v != Num(0.0)]
    # enumeration oracle: 1 year x 2 types zeros, 2 years x 2 types recurrences
    assert sorted(zero_eqs) == [("NewStock", (2000, 1)), ("NewStock", (2000, 2))]
    assert len(recur_eqs) == 4
    assert set(zero_eqs) & set(recur_eqs) == set()


def test_expand_conflict_detection():
    obj = parse_object("{# t[1:1] | t[1] = 1, t[1] = 2 #}")
    with pytest.raises(MultipleDefinitionError):
        expand(obj)


def test_expand_offset_out_of_bounds():
    obj = parse_object("{# t[1:3] | t[all i] = t[i-1] #}")
    with pytest.raises(OutOfBoundsError):
        expand(obj)


def test_expand_variable_as_value():
    obj = parse_object("{# t[1:3] | t[all i] = i #}")
    e = expand(obj)
    assert e.cells[("t", (2,))] == Num(2.0)


def test_instance_count_matches_enumeration():
    prog = parse_program(MINI_MODEL_DEF)
    obj = apply_function(prog.definitions[0], [2000, 2006, 4])
    assert instance_count(obj) == len(expand(obj).cells)


# --------------------------------------------------------------------------
# mapping

def _lettings_object():
    return parse_object(
        "{# Lettings[2000:2010, 1:20] | Lettings[all y, all dt] = 5 #}")


def test_element_addr_offsets():
    obj = _lettings_object()
    entry = MapEntry("Lettings", CellAddr("Lets", 4, 8), "yx")
    decl = obj.tables["Lettings"]

    def oracle(year, dwelling):
        # the first dimension runs downwards, the second across
        return CellAddr("Lets", 4 + (dwelling - 1), 8 + (year - 2000))

    assert element_addr(decl, entry, (2000, 1)) == CellAddr("Lets", 4, 8)
    assert a1_format(element_addr(decl, entry, (2001, 3))) == "Lets!F9"
    for year, dwelling in itertools.product((2000, 2004, 2010), (1, 7, 20)):
        assert element_addr(decl, entry, (year, dwelling)) == oracle(year, dwelling)


def test_map_table_writes_literals_and_formulas():
    obj = parse_object(
        "{# a[1:2], b[1:2] | a[all i]=7, b[all i]=a[i]*2 #}")
    m = MappingSpec([MapEntry("a", CellAddr("S", 1, 1), "y"),
                     MapEntry("b", CellAddr("S", 3, 1), "y")])
    w = map_table(obj, m)
    assert w.cell(CellAddr("S", 1, 1)) == 7.0
    from sheetforge.emitter import format_formula_a1
    assert format_formula_a1(w.cell(CellAddr("S", 3, 1))) == "A1*2"


def test_map_table_unmapped_reference():
    obj = parse_object("{# a[1:1], b[1:1] | a[1]=b[1], b[1]=0 #}")
    m = MappingSpec([MapEntry("a", CellAddr("S", 1, 1), "y")])
    with pytest.raises(MappingError):
        map_table(obj, m)


def test_map_table_overlap():
    obj = parse_object("{# a[1:3], b[1:3] | a[all i]=0, b[all i]=1 #}")
    m = MappingSpec([MapEntry("a", CellAddr("S", 1, 1), "y"),
                     MapEntry("b", CellAddr("S", 1, 3), "y")])
    with pytest.raises(MappingError):
        map_table(obj, m)


def test_mapping_orientation_arity():
    obj = _lettings_object()
    m = MappingSpec([MapEntry("Lettings", CellAddr("Lets", 1, 1), "y")])
    with pytest.raises(MappingError):
        map_table(obj, m)


def test_layout_invariance_of_values():
    """The slogan as a theorem: evaluated element values agree under any
    two valid mappings."""
    prog = parse_program(MINI_MODEL_DEF)
    a = build.compile_program(prog, [2000, 2008, 3], LAYOUT_ORIGINAL)
    b = build.compile_program(prog, [2000, 2008, 3], LAYOUT_FLIPPED)
    va = evaluator.evaluate(build.compile_workbook(a))
    vb = evaluator.evaluate(build.compile_workbook(b))
    for name, decl in a.object.tables.items():
        for idx in itertools.product(*(range(d.lo, d.hi + 1) for d in decl.dims)):
            addr_a = element_addr(decl, a.mapping[name], idx)
            addr_b = element_addr(decl, b.mapping[name], idx)
            assert va[addr_a] == vb[addr_b], (name, idx)

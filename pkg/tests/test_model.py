"""Addresses, column letters, and structural equality of core values."""
import string

import pytest
from hypothesis import given, strategies as st

from sheetforge.errors import AddressUnderflowError, ModelError
from sheetforge.model import (
    Bounds, CellAddr, CellRef, Equation, Index, Num, Object, Quantifier,
    TableDecl, a1_format, a1_parse, addr_add, col_letters, col_number,
    parse_cell_addr,
)


def brute_force_letters(n: int) -> str:
    """Independent oracle: enumerate column names in order."""
    names = list(string.ascii_uppercase)
    i = 0
    while len(names) <= n:
        prefix = names[i]
        names.extend(prefix + c for c in string.ascii_uppercase)
        i += 1
    return names[n - 1]


@pytest.mark.parametrize("col", [1, 2, 25, 26, 27, 52, 53, 701, 702, 703, 18278])
def test_col_letters_against_enumerator(col):
    assert col_letters(col) == brute_force_letters(col)
    assert col_number(col_letters(col)) == col


def test_addr_add_paper_vector():
    # starting at column D with 20 dwelling types: D + 21 columns is Y
    base = CellAddr("Lets", col_number("D"), 8)
    moved = addr_add(base, 21, 0)
    assert a1_format(moved) == "Lets!Y8"
    assert brute_force_letters(4 + 21) == "Y"


def test_addr_add_identity():
    a = CellAddr("Lets", 1, 1)
    assert addr_add(a, 0, 0) == a


def test_addr_add_underflow():
    with pytest.raises(AddressUnderflowError):
        addr_add(CellAddr("Lets", 1, 1), -1, 0)


@given(st.integers(1, 500), st.integers(1, 500),
       st.integers(-100, 100), st.integers(-100, 100),
       st.integers(-100, 100), st.integers(-100, 100))
def test_addr_add_composes(col, row, dx1, dy1, dx2, dy2):
    a = CellAddr("S", col, row)
    in_grid_mid = col + dx1 >= 1 and row + dy1 >= 1
    in_grid_end = col + dx1 + dx2 >= 1 and row + dy1 + dy2 >= 1
    if in_grid_mid and in_grid_end:
        assert addr_add(addr_add(a, dx1, dy1), dx2, dy2) == addr_add(a, dx1 + dx2, dy1 + dy2)


def test_a1_format_paper_example():
    assert a1_format(CellAddr("Lets", 4, 8)) == "Lets!D8"


def test_a1_parse_absolute_markers():
    ref = a1_parse("Sheet1!$A$2")
    assert (ref.sheet, ref.col, ref.row) == ("Sheet1", 1, 2)
    assert ref.col_abs and ref.row_abs


def test_a1_parse_mixed_and_relative():
    ref = a1_parse("D8")
    assert (ref.sheet, ref.col, ref.row) == (None, 4, 8)
    assert not ref.col_abs and not ref.row_abs
    ref = a1_parse("'My Sheet'!B$3")
    assert ref.sheet == "My Sheet" and not ref.col_abs and ref.row_abs


def test_a1_parse_rejects_garbage():
    for bad in ("", "12", "A0", "!!A1", "Sheet!", "A1:B2"):
        with pytest.raises(ModelError):
            a1_parse(bad)


@given(st.text(alphabet=string.ascii_letters + "_", min_size=1, max_size=6),
       st.integers(1, 18278), st.integers(1, 99999))
def test_a1_roundtrip(sheet, col, row):
    a = CellAddr(sheet, col, row)
    assert parse_cell_addr(a1_format(a)) == a


def test_bounds_invariants():
    assert Bounds(2000, 2010).extent == 11
    assert Bounds(5, 5).extent == 1
    with pytest.raises(ModelError):
        Bounds(3, 2)


def test_element_count():
    t = TableDecl("t", (Bounds(2000, 2010), Bounds(1, 20)))
    assert t.element_count == 220
    assert TableDecl("s", ()).element_count == 1


def test_object_equality_ignores_order():
    t1 = TableDecl("a", (Bounds(1, 2),))
    t2 = TableDecl("b", (Bounds(1, 2),))
    eq1 = Equation("a", (1,), Num(1.0))
    eq2 = Equation("b", (2,), Num(2.0))
    assert Object([t1, t2], [eq1, eq2]) == Object([t2, t1], [eq2, eq1])


def test_object_deduplicates_alpha_equivalent_equations():
    t = TableDecl("a", (Bounds(1, 3),))
    from sheetforge.model import ElementRef
    eq_y = Equation("a", (Quantifier("y", ">", 1),),
                    ElementRef("a", (Index("y", -1),)))
    eq_z = Equation("a", (Quantifier("z", ">", 1),),
                    ElementRef("a", (Index("z", -1),)))
    o = Object([t], [eq_y, eq_z])
    assert len(o.equations) == 1


def test_object_rejects_unbound_and_undeclared():
    t = TableDecl("a", (Bounds(1, 3),))
    from sheetforge.model import ElementRef
    with pytest.raises(ModelError):
        Object([t], [Equation("a", (1,), ElementRef("missing", (Index(None, 1),)))])
    with pytest.raises(ModelError):
        Object([t], [Equation("a", (1,), ElementRef("a", (Index("free", 0),)))])


def test_quantifier_effective_ranges():
    dim = Bounds(2000, 2010)
    assert Quantifier("y").effective(dim) == (2000, 2010)
    assert Quantifier("y", ">", 2000).effective(dim) == (2001, 2010)
    assert Quantifier("y", "<=", 2005).effective(dim) == (2000, 2005)
    assert Quantifier("y", "=", 2004).effective(dim) == (2004, 2004)
    lo, hi = Quantifier("y", ">", 2010).effective(dim)
    assert lo > hi

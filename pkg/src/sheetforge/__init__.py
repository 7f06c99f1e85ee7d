"""Equation-based spreadsheet models: compile them to workbooks, verify
that results are invariant over layout changes, recover models from
existing workbooks, and generate cross-tabulations."""

from .algebra import (
    ExpandedObject, MapEntry, MappingSpec, apply_function, expand,
    instance_count, map_table, union,
)
from .discovery import (
    compress, detect_runs, discover_workbook, guess_names, lift,
    normalize_formula, split_annotations,
)
from .emitter import dump_grid, emit_xml, read_csv, read_xml
from .errors import Diagnostic, SheetError
from .evaluator import eval_countif, evaluate
from .layout import GridFormat, Placement, Skip, TablePlacement, Text, layout_grid, measure
from .model import (
    Bounds, CellAddr, Equation, Object, Quantifier, TableDecl, Workbook,
    a1_format, a1_parse, addr_add,
)
from .notation import parse_object, parse_program, show_object

__all__ = [name for name in dir() if not name.startswith("_")]

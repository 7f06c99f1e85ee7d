"""Deterministic formula evaluation over workbooks.

Errors are values, never exceptions: division by zero, type mismatches
and reference cycles produce error markers that propagate through
dependent formulas, mirroring spreadsheet semantics.  Blank operands
read as 0 in arithmetic and "" in concatenation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .model import (
    BinOp, Call, CellAddr, CellRef, Formula, Neg, Num, RangeRef, Str,
    Workbook, format_number,
)


@dataclass(frozen=True, slots=True)
class EvalError:
    code: str  # "#CYCLE!", "#DIV/0!", "#VALUE!"

    def __str__(self) -> str:
        return self.code


CYCLE = EvalError("#CYCLE!")
DIV0 = EvalError("#DIV/0!")
VALUE = EvalError("#VALUE!")

Value = float | str | None | EvalError


def _resolve(ref: CellRef, host_sheet: str) -> CellAddr:
    return CellAddr(ref.sheet if ref.sheet is not None else host_sheet,
                    ref.col, ref.row)


def _range_addrs(rng: RangeRef, host_sheet: str) -> list[CellAddr]:
    start = _resolve(rng.start, host_sheet)
    end = _resolve(rng.end, host_sheet)
    lo_c, hi_c = sorted((start.col, end.col))
    lo_r, hi_r = sorted((start.row, end.row))
    return [CellAddr(start.sheet, c, r)
            for r in range(lo_r, hi_r + 1) for c in range(lo_c, hi_c + 1)]


def _references(f: Formula, host_sheet: str) -> list[CellAddr]:
    out: list[CellAddr] = []
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, CellRef):
            out.append(_resolve(node, host_sheet))
        elif isinstance(node, RangeRef):
            out.extend(_range_addrs(node, host_sheet))
        elif isinstance(node, BinOp):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Call):
            stack.extend(node.args)
    return out


def _to_number(v: Value) -> float | EvalError:
    if v is None:
        return 0.0
    if isinstance(v, float):
        return v
    if isinstance(v, EvalError):
        return v
    return VALUE


def _to_text(v: Value) -> str | EvalError:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, EvalError):
        return v
    return format_number(v)


def _compare(op: str, a: Value, b: Value) -> Value:
    if isinstance(a, EvalError):
        return a
    if isinstance(b, EvalError):
        return b
    # blank coerces to the other operand's type; numbers sort before text
    if isinstance(a, str) or isinstance(b, str):
        ka = (1, a) if isinstance(a, str) else (0, a if a is not None else 0.0)
        kb = (1, b) if isinstance(b, str) else (0, b if b is not None else 0.0)
        if ka[0] != kb[0]:
            result = {"=": False, "<>": True, "<": ka[0] < kb[0], ">": ka[0] > kb[0],
                      "<=": ka[0] < kb[0], ">=": ka[0] > kb[0]}[op]
            return 1.0 if result else 0.0
        a, b = ka[1], kb[1]
    else:
        a = a if a is not None else 0.0
        b = b if b is not None else 0.0
    result = {"=": a == b, "<>": a != b, "<": a < b, ">": a > b,
              "<=": a <= b, ">=": a >= b}[op]
    return 1.0 if result else 0.0


def _arith(op: str, a: Value, b: Value) -> Value:
    x = _to_number(a)
    if isinstance(x, EvalError):
        return x
    y = _to_number(b)
    if isinstance(y, EvalError):
        return y
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if y == 0:
        return DIV0
    return x / y


def eval_countif(values: list[Value], condition: Value) -> float:
    """Count values equal to the condition; a numeric-looking condition
    compares numerically, otherwise text match is exact and case-sensitive."""
    target: Value = condition
    if isinstance(condition, str):
        try:
            target = float(condition)
        except ValueError:
            target = condition
    count = 0
    for v in values:
        if isinstance(target, float):
            if isinstance(v, float) and v == target:
                count += 1
        else:
            if isinstance(v, str) and v == target:
                count += 1
    return float(count)


def _call(name: str, f: Call, env, host_sheet: str) -> Value:
    def scalar(arg: Formula) -> Value:
        return _eval_formula(arg, env, host_sheet)

    def spread(arg: Formula) -> list[Value]:
        if isinstance(arg, RangeRef):
            return [env(a) for a in _range_addrs(arg, host_sheet)]
        return [scalar(arg)]

    if name == "IF":
        if not 2 <= len(f.args) <= 3:
            return VALUE
        cond = _to_number(scalar(f.args[0]))
        if isinstance(cond, EvalError):
            return cond
        if cond != 0:
            return scalar(f.args[1])
        return scalar(f.args[2]) if len(f.args) == 3 else 0.0

    if name == "COUNTIF":
        if len(f.args) != 2:
            return VALUE
        values = spread(f.args[0])
        for v in values:
            if isinstance(v, EvalError):
                return v
        cond = scalar(f.args[1])
        if isinstance(cond, EvalError):
            return cond
        return eval_countif(values, cond)

    if name in ("SUM", "MIN", "MAX"):
        numbers: list[float] = []
        for arg in f.args:
            if isinstance(arg, RangeRef):
                for v in spread(arg):
                    if isinstance(v, EvalError):
                        return v
                    if isinstance(v, float):
                        numbers.append(v)
            else:
                v = _to_number(scalar(arg))
                if isinstance(v, EvalError):
                    return v
                numbers.append(v)
        if name == "SUM":
            return float(sum(numbers))
        if not numbers:
            return 0.0
        return min(numbers) if name == "MIN" else max(numbers)

    return VALUE


def _eval_formula(f: Formula, env, host_sheet: str) -> Value:
    if isinstance(f, Num):
        return f.value
    if isinstance(f, Str):
        return f.value
    if isinstance(f, CellRef):
        return env(_resolve(f, host_sheet))
    if isinstance(f, RangeRef):
        return VALUE  # a bare range is not a scalar
    if isinstance(f, Neg):
        v = _to_number(_eval_formula(f.operand, env, host_sheet))
        return v if isinstance(v, EvalError) else -v
    if isinstance(f, BinOp):
        a = _eval_formula(f.left, env, host_sheet)
        b = _eval_formula(f.right, env, host_sheet)
        if f.op == "&":
            x, y = _to_text(a), _to_text(b)
            if isinstance(x, EvalError):
                return x
            if isinstance(y, EvalError):
                return y
            return x + y
        if f.op in ("=", "<>", "<", ">", "<=", ">="):
            return _compare(f.op, a, b)
        return _arith(f.op, a, b)
    if isinstance(f, Call):
        return _call(f.name, f, env, host_sheet)
    return VALUE


def evaluate(w: Workbook) -> dict[CellAddr, Value]:
    """Evaluate every cell.  Formulas are ordered topologically; cells on a
    reference cycle (and those downstream) evaluate to the cycle error."""
    values: dict[CellAddr, Value] = {}
    formulas: dict[CellAddr, Formula] = {}
    for addr, cell in w.cells():
        if isinstance(cell, str):
            values[addr] = cell
        elif isinstance(cell, (int, float)):
            values[addr] = float(cell)
        else:
            formulas[addr] = cell

    dependents: dict[CellAddr, list[CellAddr]] = {}
    missing: dict[CellAddr, int] = {}
    for addr, f in formulas.items():
        pending = [r for r in _references(f, addr.sheet) if r in formulas]
        missing[addr] = len(pending)
        for r in pending:
            dependents.setdefault(r, []).append(addr)

    def env(a: CellAddr) -> Value:
        if a in values:
            return values[a]
        if a in formulas:
            return CYCLE  # still unevaluated: on or behind a cycle
        return None  # blank cell

    queue = deque(a for a, n in missing.items() if n == 0)
    done: set[CellAddr] = set()
    while queue:
        addr = queue.popleft()
        values[addr] = _eval_formula(formulas[addr], env, addr.sheet)
        done.add(addr)
        for dep in dependents.get(addr, ()):
            missing[dep] -= 1
            if missing[dep] == 0:
                queue.append(dep)

    # whatever remains is on a cycle or depends on one
    for addr in formulas:
        if addr not in done:
            values[addr] = CYCLE
    return values

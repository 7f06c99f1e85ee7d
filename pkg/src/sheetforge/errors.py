"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class SheetError(Exception):
    """Base class for every error this package raises deliberately."""


class Diagnostic(SheetError):
    """A positioned error in some textual input (model file, CSV, XML)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None,
                 expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        where = f"{line}:{col}: " if line is not None else ""
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{where}{message}{hint}")


class ModelError(SheetError):
    """Violation of a structural invariant when building domain values."""


class AddressUnderflowError(ModelError):
    """Vector arithmetic produced a column or row below 1."""


class UnionError(SheetError):
    """Objects cannot be unioned (dimension count mismatch on a shared table)."""


class EmptyDimensionError(SheetError):
    """A table dimension ended up with lo > hi after size substitution."""

    def __init__(self, table: str, dim: int, lo: int, hi: int):
        self.table = table
        self.dim = dim
        super().__init__(f"table {table!r} dimension {dim + 1} is empty: {lo}:{hi}")


class MultipleDefinitionError(SheetError):
    """Two equations define the same table element."""

    def __init__(self, table: str, index: tuple[int, ...]):
        self.table = table
        self.index = index
        idx = ", ".join(str(i) for i in index)
        super().__init__(f"element {table}[{idx}] is defined more than once")


class OutOfBoundsError(SheetError):
    """An index expression escaped the declared bounds of a table."""


class MappingError(SheetError):
    """A mapping is incomplete or maps two elements to one cell."""


class LayoutError(SheetError):
    """Bad grid format, orientation mismatch, or layout/model cross-check failure."""


class CrosstabError(SheetError):
    """Cross-tabulation spec does not fit the source workbook."""


class XmlFormatError(Diagnostic):
    """Workbook XML is malformed or uses an unsupported construct."""

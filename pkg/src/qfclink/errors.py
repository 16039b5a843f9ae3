"""Exception types shared across the package."""


class QfcLinkError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QfcLinkError, ValueError):
    """A value violates a physical or mathematical precondition."""


class GridMismatchError(QfcLinkError, ValueError):
    """Two spectra with different frequency grids were combined."""


class OutOfRangeError(QfcLinkError, ValueError):
    """A frequency falls outside the grid it must lie on."""


class ChainError(QfcLinkError, RuntimeError):
    """An element of a propagation chain failed; carries the element index."""

    def __init__(self, index: int, label: str, message: str):
        self.index = index
        self.label = label
        super().__init__(f"element {index} ({label}): {message}")


class InfeasibleError(QfcLinkError, ArithmeticError):
    """A numerical inversion has no solution (for example a fully blocked path)."""


class ScenarioParseError(QfcLinkError, ValueError):
    """A scenario file failed validation; carries the file location."""

    def __init__(self, message: str, line: int | None = None,
                 section: str | None = None, key: str | None = None):
        self.line = line
        self.section = section
        self.key = key
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if section is not None:
            loc.append(f"section [{section}]")
        if key is not None:
            loc.append(f"key '{key}'")
        prefix = ", ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)

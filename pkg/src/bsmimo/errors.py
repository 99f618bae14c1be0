"""Exception hierarchy. Each category maps to a CLI exit code."""


class BsmimoError(Exception):
    exit_code = 4


class ConfigError(BsmimoError, ValueError):
    exit_code = 1

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class IngestError(BsmimoError, ValueError):
    """Malformed or inconsistent input file."""

    exit_code = 2

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where = f"{path}"
            if row is not None:
                where += f", row {row}"
            where += ": "
        super().__init__(where + message)


class GridError(BsmimoError, ValueError):
    exit_code = 1


class DegenerateError(BsmimoError, ArithmeticError):
    """A numerical degeneracy (singular load block, zero-power basis, ...)."""

    exit_code = 3


class SymmetryError(DegenerateError):
    pass

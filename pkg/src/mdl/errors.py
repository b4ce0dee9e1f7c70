"""Error classes shared across the pipeline.

Every runtime error raised by interpreted code derives from :class:`MdlError`
and carries an ``exit_code`` used by the command-line driver.
"""

from __future__ import annotations


class MdlError(Exception):
    exit_code = 1
    kind = "Error"


# -- static errors ---------------------------------------------------------

class StaticError(MdlError):
    exit_code = 4
    kind = "StaticError"


class MdlSyntaxError(StaticError):
    kind = "SyntaxError"

    def __init__(self, msg: str, line: int = 0, col: int = 0, path: str | None = None):
        where = f"{path or '<input>'}:{line}:{col}"
        super().__init__(f"{where}: {msg}")
        self.line = line
        self.col = col


class LoweringError(StaticError):
    kind = "LoweringError"


class DeclarationMissing(StaticError):
    kind = "DeclarationMissing"


class MalformedType(StaticError):
    kind = "MalformedType"


class UnsupportedError(StaticError):
    kind = "Unsupported"


# -- runtime errors --------------------------------------------------------

class MethodError(MdlError):
    exit_code = 2
    kind = "MethodError"


class AmbiguityError(MethodError):
    kind = "AmbiguityError"


class TypeAssertError(MdlError):
    exit_code = 3
    kind = "TypeAssertError"


class BoundsError(MdlError):
    exit_code = 3
    kind = "BoundsError"


class DivideError(MdlError):
    exit_code = 3
    kind = "DivideError"


class UndefVarError(MdlError):
    exit_code = 3
    kind = "UndefVarError"


class UserError(MdlError):
    """Raised by ``error(msg)`` and by ``throw`` of a non-builtin value."""

    exit_code = 3
    kind = "ErrorException"


class StackOverflow(MdlError):
    exit_code = 3
    kind = "StackOverflowError"

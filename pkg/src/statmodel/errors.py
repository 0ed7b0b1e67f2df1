"""Exception hierarchy shared by all statmodel subsystems."""

from __future__ import annotations


class StatModelError(Exception):
    """Base class for every error raised by this package."""


# --- source frontend ---------------------------------------------------


class SourceSyntaxError(StatModelError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedConstruct(StatModelError):
    def __init__(self, construct: str, line: int):
        super().__init__(f"unsupported construct '{construct}' (line {line})")
        self.construct = construct
        self.line = line


class MalformedAnnotation(StatModelError):
    pass


class UnknownAnnotationKey(StatModelError):
    def __init__(self, key: str):
        super().__init__(f"unknown annotation key '{key}'")
        self.key = key


class AnnotationMismatch(StatModelError):
    pass


# --- polyhedral counting -----------------------------------------------


class NonAffineBound(StatModelError):
    def __init__(self, index: str, reason: str = ""):
        msg = f"non-affine bound at loop level '{index}'"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.index = index
        self.reason = reason


class NonAffineCondition(StatModelError):
    pass


class EnumerationTooLarge(StatModelError):
    pass


class UnboundParameter(StatModelError):
    def __init__(self, names):
        names = sorted(names) if not isinstance(names, str) else [names]
        super().__init__("unbound parameter(s): " + ", ".join(names))
        self.names = names


# --- binary evidence ----------------------------------------------------


class NotAnElf(StatModelError):
    pass


class MissingDebugInfo(StatModelError):
    pass


class UnsupportedDwarfVersion(StatModelError):
    def __init__(self, version: int):
        super().__init__(f"unsupported DWARF line-table version {version} (supported: 3-5)")
        self.version = version


class CorruptLineProgram(StatModelError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at .debug_line offset {offset:#x})")
        self.offset = offset


class DisassemblyError(StatModelError):
    """Raised when too many disassembly lines fail to parse."""


class ArchDescriptionError(StatModelError):
    pass


# --- metric / model assembly ---------------------------------------------


class ModelGapError(StatModelError):
    """A structure could not be modeled and no annotation supplied a fallback."""


class DuplicateFunction(StatModelError):
    pass


class UnresolvedCallee(StatModelError):
    pass


class UnknownFunction(StatModelError):
    def __init__(self, name: str):
        super().__init__(f"unknown function '{name}'")
        self.name = name


class SchemaVersionMismatch(StatModelError):
    pass


class MalformedModel(StatModelError):
    pass


class ZeroDenominator(StatModelError):
    pass

"""Exception types raised across the package."""


class SMHError(Exception):
    """Base class for all package errors."""


class IsolatedNode(SMHError):
    pass


class ConvergenceFailure(SMHError):
    pass


class DimensionMismatch(SMHError, ValueError):
    pass


class ParseError(SMHError, ValueError):
    """Malformed SMILES input; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class MissingColumn(SMHError, KeyError):
    pass


class EmptyDataset(SMHError):
    pass


class DegenerateTargets(SMHError, ValueError):
    pass


class InsufficientData(SMHError, ValueError):
    pass


class NonFiniteTarget(SMHError, ValueError):
    pass


class CholeskyFailure(SMHError):
    pass


class AllZeroWeights(SMHError):
    pass


class EmptyGraph(SMHError):
    pass


class LengthMismatch(SMHError, ValueError):
    pass


class EmptyCollection(SMHError, ValueError):
    pass


class FoldFailure(SMHError):
    def __init__(self, fold: int, cause: BaseException):
        super().__init__(f"fold {fold} failed: {type(cause).__name__}: {cause}")
        self.fold = fold
        self.cause = cause

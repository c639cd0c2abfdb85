"""Exception types shared across the package."""


class VisusError(Exception):
    """Base class for all errors raised by this package."""


# -- ingest ------------------------------------------------------------

class LengthMismatch(VisusError):
    def __init__(self, line_no: int, declared: int, actual: int):
        super().__init__(
            f"line {line_no}: declared length {declared} != actual {actual}"
        )
        self.line_no = line_no
        self.declared = declared
        self.actual = actual


class MalformedLine(VisusError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class MalformedRow(VisusError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"row {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class MissingSlice(VisusError):
    def __init__(self, scan_id: str, index: int):
        super().__init__(f"scan {scan_id}: slice {index} missing")
        self.scan_id = scan_id
        self.index = index


class BadSliceCount(VisusError):
    def __init__(self, scan_id: str, count: int):
        super().__init__(f"scan {scan_id}: expected 25 slices, found {count}")
        self.scan_id = scan_id
        self.count = count


class EmptySalt(VisusError):
    pass


# -- ontology ----------------------------------------------------------

class InvalidRuleSet(VisusError):
    pass


# -- cohort ------------------------------------------------------------

class OutOfRange(VisusError):
    pass


class IndexOutOfRange(VisusError):
    pass


class NegativeSpan(VisusError):
    pass


# -- oct ---------------------------------------------------------------

class BadRange(VisusError):
    pass


class DegenerateLabels(VisusError):
    pass


# -- features ----------------------------------------------------------

class SeriesTooShort(VisusError):
    pass


# -- predict -----------------------------------------------------------

class EmptyDataset(VisusError):
    pass


class NonFiniteLoss(VisusError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class SingularScatter(VisusError):
    pass


# -- synth / service ---------------------------------------------------

class InvalidConfig(VisusError):
    pass


class UnknownPatient(VisusError):
    pass


class IndexTooEarly(VisusError):
    pass

"""Exception hierarchy shared by all modules."""


class DpnSoundError(Exception):
    """Base class for every error raised by this package."""


# constraints

class ConstraintError(DpnSoundError):
    pass


class UnboundVariable(ConstraintError, KeyError):
    def __str__(self):
        return f"unbound variable {self.args[0]}"


class SortMismatch(ConstraintError, TypeError):
    pass


class CaptureError(ConstraintError):
    pass


class GuardParseError(ConstraintError, ValueError):
    def __init__(self, message: str, text: str = "", position: int = 0):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


class UndeclaredVariable(ConstraintError, ValueError):
    def __init__(self, name: str):
        super().__init__(f"undeclared variable {name!r}")
        self.name = name


# solver

class SolverError(DpnSoundError):
    pass


class SolverUnavailable(SolverError):
    pass


class QENotSupported(SolverError):
    pass


class Inconclusive(SolverError):
    """The solver answered ``unknown`` (timeout or incompleteness)."""


# model files

class PnmlError(DpnSoundError):
    pass


class XmlError(PnmlError):
    pass


class UnknownReference(PnmlError):
    def __init__(self, ref: str, where: str = ""):
        super().__init__(f"unknown reference {ref!r}" + (f" in {where}" if where else ""))
        self.ref = ref


class MissingFinalMarking(PnmlError):
    pass


class InvalidNet(PnmlError):
    """The net violates a structural invariant; carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# semantics / exploration

class NotEnabled(DpnSoundError):
    pass


class BoundExceeded(DpnSoundError):
    pass


class BudgetExceeded(DpnSoundError):
    """Constraint-graph construction hit its node budget; the system possibly
    has no finite history set."""

    def __init__(self, budget: int, where: str = ""):
        super().__init__(f"constraint graph{' ' + where if where else ''} exceeded {budget} nodes "
                         "(possibly no finite history set)")
        self.budget = budget


class ExplosionGuard(DpnSoundError):
    pass


class WitnessReplayFailed(DpnSoundError):
    pass

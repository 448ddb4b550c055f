"""Exception hierarchy shared by every module."""


class PlanningError(Exception):
    """Base class; CLI maps subclasses of DataError to exit 1, SolverError to 2."""


class DataError(PlanningError):
    pass


class SolverError(PlanningError):
    pass


class NoSupplierForPart(DataError):
    pass


class RouteUnavailable(DataError):
    pass


class DelayExceedsPolicy(DataError):
    pass


class AllScenariosReduced(DataError):
    pass


class EmptyBatch(DataError):
    pass


class InfeasibleStatic(DataError):
    pass


class DeadlineBeforeMinimum(DataError):
    pass


class OutOfRange(DataError):
    pass


class InconsistentPlan(DataError):
    pass


class InfeasibleHeuristic(DataError):
    pass


class NumericalBreakdown(SolverError):
    pass


class Infeasible(SolverError):
    pass


class NodeLimit(SolverError):
    pass


class IterationLimit(SolverError):
    def __init__(self, msg, incumbent=None):
        super().__init__(msg)
        self.incumbent = incumbent


class MasterInfeasible(Infeasible):
    pass


class StageBInfeasible(SolverError):
    pass

"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateUtilityError(DomainError):
    """Normalization anchors carry equal raw utilities."""


class UnknownNodeError(KeyError):
    """A node id does not belong to the tree."""

    def __str__(self):
        return f"unknown node {self.args[0]!r}"


class StructuralError(DomainError):
    """A tree fails validation; ``report`` lists the violated clauses."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class SingularMatrixError(DomainError):
    """A matrix that must be invertible (or positive definite) is not."""


class TransformationError(RuntimeError):
    """A tree transformation produced an invalid tree (internal bug)."""

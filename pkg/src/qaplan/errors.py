"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the HTTP layer and
the CLI can emit structured errors without inspecting exception classes.
"""

from __future__ import annotations


class QAPlanError(Exception):
    """Base class for all qaplan errors."""

    code = "internal"

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.message = message
        self.field = field

    def to_doc(self) -> dict:
        doc = {"code": self.code, "message": self.message}
        if self.field is not None:
            doc["field"] = self.field
        return doc


class ValidationError(QAPlanError, ValueError):
    """Input violates a documented invariant (bad range, bad shape, ...)."""

    code = "validation"

    def __init__(self, message: str, field: str | None = None, problems: list[str] | None = None):
        super().__init__(message, field=field)
        self.problems = list(problems) if problems else []

    def to_doc(self) -> dict:
        doc = super().to_doc()
        if self.problems:
            doc["problems"] = list(self.problems)
        return doc


class CatalogueMismatchError(QAPlanError):
    """A plan, profile, or technique references an id the catalogue does not define."""

    code = "catalogue-mismatch"


class NumericInputError(QAPlanError):
    """A numeric input is NaN or otherwise unusable; names the offending field."""

    code = "numeric-input"


class InfeasibleError(QAPlanError):
    """The constraint set admits no allocation."""

    code = "infeasible"


class GridCapExceededError(QAPlanError):
    """Grid enumeration was refused because the lattice is too large."""

    code = "grid-cap"

    def __init__(self, message: str, point_count: int):
        super().__init__(message)
        self.point_count = point_count

    def to_doc(self) -> dict:
        doc = super().to_doc()
        doc["point_count"] = self.point_count
        return doc


class IncompleteCatalogueError(QAPlanError):
    """Recomputation left fields with no value and no prior value to carry."""

    code = "incomplete-catalogue"

    def __init__(self, message: str, gaps: list[str]):
        super().__init__(message)
        self.gaps = list(gaps)

    def to_doc(self) -> dict:
        doc = super().to_doc()
        doc["gaps"] = list(self.gaps)
        return doc


class NotFoundError(QAPlanError):
    """A referenced document (catalogue version, scenario, job) does not exist."""

    code = "not-found"


class StaleWriteError(QAPlanError):
    """An optimistic-concurrency update carried an outdated modification stamp."""

    code = "stale-write"

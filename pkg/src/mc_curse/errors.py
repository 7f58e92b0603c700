"""Exceptions shared across modules."""


class BudgetExceededError(ValueError):
    """A requested run would exceed the configured work cap."""


class DimensionCapacityError(ValueError):
    """More dimensions were requested than the embedded tables support."""

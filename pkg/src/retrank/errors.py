"""Shared exception types."""


class ValidationError(ValueError):
    """Input data violates a documented invariant."""


class SkipExample(Exception):
    """Raised by example builders when a record cannot yield a training
    example (no termlist phrase present, no labels, no judged docs).
    Not fatal; callers count and move on."""

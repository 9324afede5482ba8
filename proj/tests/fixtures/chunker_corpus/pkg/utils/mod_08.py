"""Module 8."""


from .base import Base, Registry
import os, sys


def parse_bucket(schema, strict=False):
    """Parse bucket."""
    if schema is None:
        raise ValueError("missing schema")
    result = [item for item in schema if item]
    return result if strict else result[:]


class BuildMetric:
    """A build metric holder."""

    def __init__(self, value, limit=10):
        self.value = value
        self.limit = limit

    def describe(self):
        return f"{self.value}/{self.limit}"

    @property
    def full(self):
        return self.value >= self.limit

    @staticmethod
    def create(value):
        return BuildMetric(value)


class ApplyAccount:
    """A apply account holder."""

    def __init__(self, value, limit=10):
        self.value = value
        self.limit = limit

    def describe(self):
        return f"{self.value}/{self.limit}"

    @property
    def full(self):
        return self.value >= self.limit

    @staticmethod
    def create(value):
        return ApplyAccount(value)


class SaveRecord:
    """A save record holder."""

    def __init__(self, value, limit=10):
        self.value = value
        self.limit = limit

    def describe(self):
        return f"{self.value}/{self.limit}"

    @property
    def full(self):
        return self.value >= self.limit

    @staticmethod
    def create(value):
        return SaveRecord(value)


def apply_account(session, strict=False):
    """Apply account."""
    if session is None:
        raise ValueError("missing session")
    result = [item for item in session if item]
    return result if strict else result[:]

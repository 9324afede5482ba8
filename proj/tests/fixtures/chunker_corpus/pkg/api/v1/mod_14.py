import functools
import logging


class FetchLedger:
    """A fetch ledger holder."""

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
        return FetchLedger(value)


@functools.lru_cache(maxsize=None)
def build_shipment(key: str) -> int:
    total = 0
    for ch in key:
        total += ord(ch)
    return total


class ResolveAccount(Base, metaclass=Registry):
    kind = "resolve_account"

    def run(self, job):
        if job.ready:
            return self.process(job)
        return None

    def process(self, job):
        return job.execute()

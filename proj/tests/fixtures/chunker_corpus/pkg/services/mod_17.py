"""Module 17."""


import asyncio
import dataclasses
from typing import Any


LOG = logging.getLogger(__name__)
DEFAULTS = {
    "payload": 1,
    "retries": 3,
}
try:
    import ujson as json_impl
except ImportError:
    json_impl = None


@dataclasses.dataclass
class BuildJob:
    name: str
    size: int = 0

    class Meta:
        ordering = ["name"]

        def label(self):
            return "meta"

    def grow(self, by=1):
        self.size += by
        return self.size

    async def refresh(self):
        await asyncio.sleep(0)


async def apply_bucket(client, *args, **kwargs):
    response = await client.get(*args, **kwargs)
    async with response:
        data = await response.json()
    return data


@dataclasses.dataclass
class FlushReport:
    name: str
    size: int = 0

    class Meta:
        ordering = ["name"]

        def label(self):
            return "meta"

    def grow(self, by=1):
        self.size += by
        return self.size

    async def refresh(self):
        await asyncio.sleep(0)


class FlushOrder(Base, metaclass=Registry):
    kind = "flush_order"

    def run(self, job):
        if job.ready:
            return self.process(job)
        return None

    def process(self, job):
        return job.execute()


def parse_route(report, strict=False):
    """Parse route."""
    if report is None:
        raise ValueError("missing report")
    result = [item for item in report if item]
    return result if strict else result[:]

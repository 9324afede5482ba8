# -*- coding: utf-8 -*-
import functools


LOG = logging.getLogger(__name__)
DEFAULTS = {
    "widget": 1,
    "retries": 3,
}
try:
    import ujson as json_impl
except ImportError:
    json_impl = None


async def parse_payload(client, *args, **kwargs):
    response = await client.get(*args, **kwargs)
    async with response:
        data = await response.json()
    return data


class SyncReport(Base, metaclass=Registry):
    kind = "sync_report"

    def run(self, job):
        if job.ready:
            return self.process(job)
        return None

    def process(self, job):
        return job.execute()

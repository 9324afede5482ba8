"""Module 11."""


import asyncio
import dataclasses
from typing import Any


async def flush_payload(client, *args, **kwargs):
    response = await client.get(*args, **kwargs)
    async with response:
        data = await response.json()
    return data


def resolve_metric(bucket, strict=False):
    """Resolve metric."""
    if bucket is None:
        raise ValueError("missing bucket")
    result = [item for item in bucket if item]
    return result if strict else result[:]


def sync_session(items):
    def inner(x):
        return x * 2

    class Local:
        pass

    return [inner(i) for i in items]

# -*- coding: utf-8 -*-
import functools


LOG = logging.getLogger(__name__)
DEFAULTS = {
    "bucket": 1,
    "retries": 3,
}
try:
    import ujson as json_impl
except ImportError:
    json_impl = None


@functools.lru_cache(maxsize=None)
def resolve_shipment(key: str) -> int:
    total = 0
    for ch in key:
        total += ord(ch)
    return total


async def sync_invoice(client, *args, **kwargs):
    response = await client.get(*args, **kwargs)
    async with response:
        data = await response.json()
    return data


def apply_session(items):
    def inner(x):
        return x * 2

    class Local:
        pass

    return [inner(i) for i in items]


def load_session(items):
    def inner(x):
        return x * 2

    class Local:
        pass

    return [inner(i) for i in items]


def save_route(
    first,
    second=None,
    *,
    third: "dict[str, int] | None" = None,
):
    values = (first, second,
              third)
    return tuple(v for v in values
                 if v is not None)


def sync_invoice(token, strict=False):
    """Sync invoice."""
    if token is None:
        raise ValueError("missing token")
    result = [item for item in token if item]
    return result if strict else result[:]

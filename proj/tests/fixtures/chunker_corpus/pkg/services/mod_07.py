from .base import Base, Registry
import os, sys


def build_account(
    first,
    second=None,
    *,
    third: "dict[str, int] | None" = None,
):
    values = (first, second,
              third)
    return tuple(v for v in values
                 if v is not None)


async def parse_session(client, *args, **kwargs):
    response = await client.get(*args, **kwargs)
    async with response:
        data = await response.json()
    return data


def parse_cache(
    first,
    second=None,
    *,
    third: "dict[str, int] | None" = None,
):
    values = (first, second,
              third)
    return tuple(v for v in values
                 if v is not None)


async def load_record(client, *args, **kwargs):
    response = await client.get(*args, **kwargs)
    async with response:
        data = await response.json()
    return data


if __name__ == "__main__":
    import sys
    sys.exit(main())

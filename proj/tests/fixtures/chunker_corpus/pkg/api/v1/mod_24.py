"""Module 24."""


# -*- coding: utf-8 -*-
import functools


def check_report(bucket, strict=False):
    """Check report."""
    if bucket is None:
        raise ValueError("missing bucket")
    result = [item for item in bucket if item]
    return result if strict else result[:]


@functools.lru_cache(maxsize=None)
def resolve_cache(key: str) -> int:
    total = 0
    for ch in key:
        total += ord(ch)
    return total


def parse_profile(ledger, strict=False):
    """Parse profile."""
    if ledger is None:
        raise ValueError("missing ledger")
    result = [item for item in ledger if item]
    return result if strict else result[:]


def render_widget(items):
    def inner(x):
        return x * 2

    class Local:
        pass

    return [inner(i) for i in items]


if __name__ == "__main__":
    import sys
    sys.exit(main())

from .models import Store


def helper(data):
    return normalize(data)


def normalize(data):
    return sorted(data)


def make_store():
    s: Store = build()
    s.save()
    return s

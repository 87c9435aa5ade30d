"""Helpers with no decorators at all."""


def slugify(value: str) -> str:
    return value.lower().replace(" ", "-")


def chunk(items, size):
    for i in range(0, len(items), size):
        yield items[i : i + size]

_CACHE = {}


def get(key, default=None):
    return _CACHE.get(key, default)


def put(key, value):
    _CACHE[key] = value

REGISTRY = {}


def register(fn):
    REGISTRY[fn.__name__] = fn
    return fn


def names():
    return sorted(REGISTRY)

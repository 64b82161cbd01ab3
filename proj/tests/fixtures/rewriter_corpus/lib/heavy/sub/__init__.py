def thing(x):
    return [x, x]


def other(x):
    return {"x": x}


DEFAULT = 11

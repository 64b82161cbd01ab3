import plugin


@plugin.register
def handler(x):
    return x


def registered():
    return plugin.names()

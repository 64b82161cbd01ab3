import heavy as hv
import other as o

LIMIT = 3


def handler(event):
    if event > LIMIT:
        return o.shout(hv.describe(event))
    return hv.scale(event)


def version():
    return hv.VERSION

from heavy import *


def handler(x):
    return scale(x)

VERSION = "1.4"


def scale(x):
    return x * 3


def describe(obj):
    return "heavy:" + repr(obj)


class Model:
    def __init__(self, k):
        self.k = k

    def predict(self, x):
        return x + self.k

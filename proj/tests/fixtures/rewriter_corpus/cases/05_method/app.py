import heavy


class Service:
    """Wraps a model."""

    greeting = "svc"

    def __init__(self, k):
        self.model = heavy.Model(k)

    def call(self, x):
        return self.greeting, self.model.predict(x)

    @staticmethod
    def static_scale(x):
        return heavy.scale(x)


def run(x):
    return Service(2).call(x)


def run_static(x):
    return Service.static_scale(x)

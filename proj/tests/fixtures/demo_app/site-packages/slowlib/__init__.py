import time

# Stands in for a library with an expensive module body.
time.sleep(0.2)


def compute(x):
    return {"computed": x}

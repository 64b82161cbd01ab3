"""Single handler using a heavy library."""
import json
import heavy


def handler(event):
    return json.dumps({"y": heavy.scale(event["x"])})

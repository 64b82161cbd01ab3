"""Imports a corpus program, calls its entry points, and prints what happened as JSON.

    python3 -B harness.py <app_dir> <case.json>

Reported: which flagged modules were loaded right after import, and for each
call its return value, captured stdout and the flagged modules loaded after it.
"""

import contextlib
import io
import json
import os
import sys


def main():
    app_dir, case_path = sys.argv[1], sys.argv[2]
    with open(case_path) as fh:
        case = json.load(fh)
    sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "lib"))
    sys.path.insert(0, app_dir)
    watched = sorted(set(case["flagged"]) | set(case.get("loads", [])))

    def loaded():
        return {m: m in sys.modules for m in watched}

    import app

    out = {"after_import": loaded(), "calls": []}
    for name, args in case["entries"]:
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            result = getattr(app, name)(*args)
        out["calls"].append({"entry": name, "result": repr(result), "stdout": buf.getvalue(), "loaded": loaded()})
    print(json.dumps(out, sort_keys=True))


if __name__ == "__main__":
    main()

def run(text):
    return "stem(" + text + ")"

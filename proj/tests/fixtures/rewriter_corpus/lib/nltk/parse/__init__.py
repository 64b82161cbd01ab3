def run(text):
    return "parse(" + text + ")"

def run(text):
    return "tag(" + text + ")"

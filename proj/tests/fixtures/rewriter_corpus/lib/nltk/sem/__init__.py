def run(text):
    return "sem(" + text + ")"

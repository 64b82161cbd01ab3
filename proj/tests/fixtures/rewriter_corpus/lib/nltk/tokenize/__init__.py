def run(text):
    return "tokenize(" + text + ")"

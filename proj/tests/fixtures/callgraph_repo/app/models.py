class Store:
    """Persists values."""

    def __init__(self, value):
        self.value = value
        self.log = Logger()

    def save(self):
        self.validate()
        self.log.write(self.value)

    def validate(self):
        return self.value is not None


class Logger:
    def write(self, text):
        print(text)

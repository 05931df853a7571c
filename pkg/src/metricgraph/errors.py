"""Exception type shared by every module.

Each failure carries a short machine-readable ``code`` (for instance
``NOT_RESONANT`` or ``SHAPE_MISMATCH``) so callers and the command line can
branch on it without parsing messages.
"""


class MetricGraphError(Exception):
    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}")
